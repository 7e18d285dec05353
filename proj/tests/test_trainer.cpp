#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ffreg/benchmarks.hpp"
#include "ffreg/random.hpp"
#include "ffreg/trainer.hpp"

using namespace ffreg;

namespace {

Sample sample(double x, double y) {
    Sample s;
    s.x = Vector::Constant(1, x);
    s.y_actual = y;
    return s;
}

TrainConfig range_config(double tol, double lo, double hi, int n_in, int n_out) {
    TrainConfig c;
    c.tol = tol;
    c.y_min = lo;
    c.y_max = hi;
    c.n_in_tol = n_in;
    c.n_out_tol = n_out;
    return c;
}

bool same_bits(const Matrix& a, const Matrix& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

std::vector<Sample> line_samples(int n) {
    std::vector<Sample> out;
    for (int i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / (n - 1);
        out.push_back(sample(x, x));
    }
    return out;
}

}  // namespace

TEST_CASE("config validation names the field") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    auto fails_on = [](TrainConfig bad, const std::string& field) {
        try {
            bad.validate();
            FAIL("expected failure on " << field);
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find(field) != std::string::npos);
        }
    };
    TrainConfig bad = c;
    bad.n_epochs = 0;
    fails_on(bad, "n_epochs");
    bad = c;
    bad.tol = 1.0;  // not below (y_max - y_min) / 2
    fails_on(bad, "tol");
    bad = c;
    bad.y_min = 2.0;
    fails_on(bad, "y_min");
    bad = c;
    bad.n_out_tol = 0;
    fails_on(bad, "n_out_tol");
    bad = c;
    bad.optimizer.learning_rate = 0.0;
    fails_on(bad, "learning_rate");
}

TEST_CASE("generate_trial_points examples") {
    SUBCASE("even in-tol spacing") {
        const TrialPoints t = generate_trial_points(sample(0, 0.5), range_config(0.1, 0.0, 1.0, 3, 4));
        REQUIRE(t.in_tol.size() == 3);
        CHECK(t.in_tol[0] == doctest::Approx(0.4).epsilon(1e-15));
        CHECK(t.in_tol[1] == 0.5);
        CHECK(t.in_tol[2] == doctest::Approx(0.6).epsilon(1e-15));
        // Sides are equally long, so the four out-tol points split 2/2.
        REQUIRE(t.out_tol.size() == 4);
        CHECK(t.out_tol[0] == 0.0);
        CHECK(t.out_tol[1] == doctest::Approx(0.2).epsilon(1e-15));
        CHECK(t.out_tol[2] == doctest::Approx(0.8).epsilon(1e-15));
        CHECK(t.out_tol[3] == 1.0);
    }
    SUBCASE("band fills the range") {
        CHECK_THROWS_AS(generate_trial_points(sample(0, 0.0), range_config(1.0, -1.0, 1.0, 3, 2)),
                        std::invalid_argument);
    }
    SUBCASE("band sticks out of the range, message names the sample") {
        try {
            generate_trial_points(sample(0, 0.95), range_config(0.1, 0.0, 1.0, 3, 2), 7);
            FAIL("expected invalid_argument");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("sample 7") != std::string::npos);
        }
    }
    SUBCASE("one empty side gets no points") {
        const TrialPoints t = generate_trial_points(sample(0, 0.75), range_config(0.25, 0.0, 1.0, 2, 5));
        REQUIRE(t.out_tol.size() == 5);
        for (double p : t.out_tol) CHECK(p < 0.5);
    }
    SUBCASE("short side still gets one point") {
        const TrialPoints t = generate_trial_points(sample(0, 0.15), range_config(0.1, 0.0, 10.0, 2, 10));
        const auto low = std::count_if(t.out_tol.begin(), t.out_tol.end(), [](double p) { return p < 0.15; });
        CHECK(low == 1);
    }
    SUBCASE("f3 preset counts") {
        const TrialPoints t = generate_trial_points(sample(0, 0.3), range_config(0.01, -2.0, 2.0, 10, 10));
        CHECK(t.in_tol.size() == 10);
        CHECK(t.out_tol.size() == 10);
    }
}

TEST_CASE("contrastive dataset properties over random cases") {
    SeededRng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        const int n = 1 + static_cast<int>(rng.next_u64() % 12);
        TrainConfig cfg;
        cfg.y_min = rng.uniform(-5.0, 0.0);
        cfg.y_max = cfg.y_min + rng.uniform(0.5, 6.0);
        const double span = cfg.y_max - cfg.y_min;
        cfg.tol = rng.uniform(1e-4, 0.2) * span;
        cfg.n_in_tol = 1 + static_cast<int>(rng.next_u64() % 20);
        cfg.n_out_tol = 1 + static_cast<int>(rng.next_u64() % 60);
        std::vector<Sample> samples;
        for (int i = 0; i < n; ++i) {
            Sample s;
            s.x = Vector(d);
            for (int k = 0; k < d; ++k) s.x[k] = rng.normal();
            // Keep the band inside the range and leave room on at least one side.
            s.y_actual = rng.uniform(cfg.y_min + cfg.tol, cfg.y_max - cfg.tol);
            samples.push_back(s);
        }
        const ContrastiveDataset data = build_contrastive_dataset(samples, cfg);
        const std::size_t per = static_cast<std::size_t>(cfg.n_in_tol + cfg.n_out_tol);
        REQUIRE(data.positive.size() == samples.size() * per);
        REQUIRE(data.negative.size() == data.positive.size());
        for (std::size_t i = 0; i < data.positive.size(); ++i) {
            const LabeledPoint& p = data.positive[i];
            const LabeledPoint& q = data.negative[i];
            const Sample& s = samples[i / per];
            CHECK(p.x == q.x);
            CHECK(p.x == s.x);
            CHECK(p.y_trial == q.y_trial);
            CHECK(q.label == 1.0 - p.label);
            CHECK((p.label == 0.0 || p.label == 1.0));
            CHECK(p.y_trial >= cfg.y_min);
            CHECK(p.y_trial <= cfg.y_max);
            const double gap = std::abs(p.y_trial - s.y_actual);
            if (p.label == 1.0) {
                CHECK(gap <= cfg.tol);
            } else {
                CHECK(gap > cfg.tol);
            }
        }
    }
}

TEST_CASE("input matrix layout") {
    std::vector<LabeledPoint> pts{{Vector::Constant(2, 3.0), 0.5, 1.0}, {Vector::Constant(2, -1.0), 0.25, 0.0}};
    const Matrix m = to_input_matrix(pts);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 4);
    CHECK(m(0, 0) == 3.0);
    CHECK(m(0, 2) == 0.5);
    CHECK(m(0, 3) == 1.0);
    CHECK(m(1, 1) == -1.0);
    CHECK(m(1, 3) == 0.0);
}

TEST_CASE("optimizer_step") {
    SUBCASE("sgd") {
        std::vector<double> p{1.0};
        const std::vector<double> g{1.0};
        OptimizerSettings s;
        s.kind = OptimizerKind::Sgd;
        s.learning_rate = 0.1;
        OptimizerState st;
        optimizer_step(p, g, s, st);
        CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
        const std::vector<double> zero{0.0};
        optimizer_step(p, zero, s, st);
        CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-15));
    }
    SUBCASE("adam first step is lr in magnitude whatever the gradient scale") {
        for (double scale : {1e-6, 1.0, 1e6}) {
            std::vector<double> p{0.0, 0.0};
            const std::vector<double> g{scale, -scale};
            OptimizerSettings s;
            OptimizerState st;
            optimizer_step(p, g, s, st);
            CHECK(p[0] == doctest::Approx(-1e-3).epsilon(1e-4));
            CHECK(p[1] == doctest::Approx(1e-3).epsilon(1e-4));
        }
    }
    SUBCASE("adam with zero gradient leaves parameters alone") {
        std::vector<double> p{0.3, -2.0};
        const std::vector<double> g{0.0, 0.0};
        OptimizerSettings s;
        OptimizerState st;
        for (int i = 0; i < 5; ++i) optimizer_step(p, g, s, st);
        CHECK(p[0] == 0.3);
        CHECK(p[1] == -2.0);
    }
    SUBCASE("adam hand-worked second step") {
        std::vector<double> p{0.0};
        OptimizerSettings s;
        s.learning_rate = 0.1;
        OptimizerState st;
        const std::vector<double> g1{1.0};
        const std::vector<double> g2{3.0};
        optimizer_step(p, g1, s, st);
        optimizer_step(p, g2, s, st);
        const double m = (0.9 * 0.1 * 1.0 + 0.1 * 3.0) / (1 - 0.81);
        const double v = (0.999 * 0.001 * 1.0 + 0.001 * 9.0) / (1 - 0.999 * 0.999);
        const double second = 0.1 * m / (std::sqrt(v) + 1e-8);
        CHECK(p[0] == doctest::Approx(-0.1 * 1.0 / (1.0 + 1e-8) - second).epsilon(1e-12));
    }
    SUBCASE("size mismatch") {
        std::vector<double> p{0.0};
        const std::vector<double> g{1.0, 2.0};
        OptimizerState st;
        CHECK_THROWS_AS(optimizer_step(p, g, {}, st), std::invalid_argument);
    }
}

TEST_CASE("one epoch means one update per layer") {
    const std::vector<Sample> samples = line_samples(4);
    TrainConfig cfg = range_config(0.1, -0.5, 1.5, 3, 3);
    cfg.n_epochs = 1;
    const FFModel m = init_model(std::vector<int>{6, 5, 4}, 3, 2);
    const TrainResult r = train(m, build_contrastive_dataset(samples, cfg), cfg);
    CHECK(r.parameter_updates == 3);
    REQUIRE(r.loss_history.size() == 3);
    for (const auto& h : r.loss_history) CHECK(h.size() == 1);
    REQUIRE(r.model.training.has_value());
    CHECK(r.model.training->tol == 0.1);
    REQUIRE(r.model.training->x_domain.size() == 1);
    CHECK(r.model.training->x_domain[0].first == 0.0);
    CHECK(r.model.training->x_domain[0].second == 1.0);
}

TEST_CASE("layer isolation") {
    // Training a one-layer prefix must leave the layer that follows untouched,
    // and layer 0's result must not depend on what sits after it.
    const std::vector<Sample> samples = line_samples(6);
    TrainConfig cfg = range_config(0.1, -0.5, 1.5, 4, 4);
    cfg.n_epochs = 25;
    const ContrastiveDataset data = build_contrastive_dataset(samples, cfg);

    const FFModel full = init_model(std::vector<int>{8, 6}, 3, 5);
    FFModel first_only = full;
    first_only.layers.pop_back();

    const TrainResult a = train(full, data, cfg);
    const TrainResult b = train(first_only, data, cfg);
    CHECK(same_bits(a.model.layers[0].weights(), b.model.layers[0].weights()));
    CHECK(same_bits(a.model.layers[0].bias(), b.model.layers[0].bias()));

    CHECK(!same_bits(a.model.layers[1].weights(), full.layers[1].weights()));

    // Layer 1 sees no updates until layer 0 has run all its epochs.
    std::vector<std::size_t> order;
    train(full, data, cfg, [&](const TrainProgress& p) { order.push_back(p.layer); });
    CHECK(std::is_sorted(order.begin(), order.end()));
    CHECK(order.size() == 50);
    CHECK(a.model.layers[1].zeta() == full.layers[1].zeta());
}

TEST_CASE("training is deterministic") {
    const std::vector<Sample> samples = line_samples(5);
    TrainConfig cfg = range_config(0.1, -0.5, 1.5, 4, 4);
    cfg.n_epochs = 20;
    const FFModel m = init_model(std::vector<int>{8, 6}, 3, 77);
    const ContrastiveDataset data = build_contrastive_dataset(samples, cfg);
    const TrainResult a = train(m, data, cfg);
    const TrainResult b = train(m, data, cfg);
    CHECK(serialize_model(a.model) == serialize_model(b.model));
    CHECK(a.loss_history == b.loss_history);

    TrainConfig mb = cfg;
    mb.minibatch_size = 7;
    const TrainResult c = train(m, data, mb);
    const TrainResult d = train(m, data, mb);
    CHECK(serialize_model(c.model) == serialize_model(d.model));
    CHECK(c.parameter_updates == 2 * 20 * ((static_cast<long long>(data.positive.size()) + 6) / 7));
}

TEST_CASE("goodness separation on the identity line") {
    const std::vector<Sample> samples = line_samples(10);
    TrainConfig cfg = range_config(0.1, -0.25, 1.25, 10, 10);
    cfg.n_epochs = 500;
    const FFModel m = init_model(std::vector<int>{64, 128, 32}, 3, 1);
    const TrainResult r = train(m, build_contrastive_dataset(samples, cfg), cfg);
    REQUIRE(r.final_delta.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(r.final_g_pos[i] > r.final_g_neg[i]);
        CHECK(r.loss_history[i].back() <= r.loss_history[i].front());
        for (double l : r.loss_history[i]) CHECK(std::isfinite(l));
    }
}

TEST_CASE("divergence aborts with context") {
    const std::vector<Sample> samples = line_samples(4);
    TrainConfig cfg = range_config(0.1, -0.5, 1.5, 3, 3);
    cfg.n_epochs = 3;
    const ContrastiveDataset data = build_contrastive_dataset(samples, cfg);
    ContrastiveDataset poisoned = data;
    poisoned.positive[2].x[0] = NAN;
    poisoned.negative[2].x[0] = NAN;
    const FFModel m = init_model(std::vector<int>{4, 4}, 3, 3);
    try {
        train(m, poisoned, cfg);
        FAIL("expected TrainingDivergedError");
    } catch (const TrainingDivergedError& e) {
        CHECK(std::string(e.what()).find("layer") != std::string::npos);
    }
}
