#include "ffreg/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "ffreg/baseline.hpp"
#include "ffreg/csv_io.hpp"

namespace ffreg::bench {

namespace {

using std::numbers::pi;

double f1(const Vector& x) { return std::sin(2.0 * pi * x[0]) + 1.0; }
double f2(const Vector& x) { return std::exp(-0.3 * x[0]) * std::cos(pi * x[0] / 2.0); }
double f3(const Vector& x) { return std::sin(pi * x[0]) + 0.5 * std::cos(2.0 * pi * x[0]); }
double f4(const Vector& x) { return x[0] * x[0] + x[1] * x[1]; }
double f5(const Vector& x) { return 2.0 * std::sin(x[0]) + std::cos(x[1]); }
double f6(const Vector& x) { return x[0] * x[0] + x[1] * x[1] + x[2] * x[2]; }
double f7(const Vector& x) {
    const double c = std::cos(x[2] / 5.0);
    return std::sin(x[0] * x[1] / 5.0) + c * c + x[0] * x[1] * x[2];
}
double f8(const Vector& x) {
    return std::exp(x[0] * x[0] / 5.0) * std::sin(x[1] * x[2] / 5.0) +
           std::exp(x[1] * x[1] / 5.0) * std::sin(x[0] * x[2] / 5.0) +
           std::exp(x[2] * x[2] / 5.0) * std::sin(x[1] * x[0] / 5.0);
}

DomainBox box(int dim, double lo, double hi) {
    return DomainBox{std::vector<std::pair<double, double>>(static_cast<std::size_t>(dim), {lo, hi})};
}

const std::array<BenchmarkFunction, 8>& registry() {
    static const std::array<BenchmarkFunction, 8> fns{{
        {BenchmarkId::F1, 1, box(1, 0.0, 4.0), f1, "chosen: four periods"},
        {BenchmarkId::F2, 1, box(1, 0.0, 4.0), f2, "chosen: one period of cos(pi x/2)"},
        {BenchmarkId::F3, 1, box(1, 0.0, 2.0), f3, "one period, matches the dense query sweep on [0,2]"},
        {BenchmarkId::F4, 2, box(2, -2.0, 2.0), f4, "chosen: [-2,2]^2"},
        {BenchmarkId::F5, 2, box(2, -2.0, 2.0), f5, "chosen: [-2,2]^2"},
        {BenchmarkId::F6, 3, box(3, -3.0, 3.0), f6, "x1,x2,x3 in [-3,3]"},
        {BenchmarkId::F7, 3, box(3, -3.0, 3.0), f7, "x1,x2,x3 in [-3,3]"},
        {BenchmarkId::F8, 3, box(3, -3.0, 3.0), f8, "x1,x2,x3 in [-3,3]"},
    }};
    return fns;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string to_string(BenchmarkId id) {
    return "f" + std::to_string(static_cast<int>(id) + 1);
}

BenchmarkId parse_benchmark_id(const std::string& text) {
    if (text.size() == 2 && (text[0] == 'f' || text[0] == 'F') && text[1] >= '1' && text[1] <= '8') {
        return static_cast<BenchmarkId>(text[1] - '1');
    }
    throw std::invalid_argument("unknown benchmark '" + text + "' (expected f1..f8)");
}

const BenchmarkFunction& benchmark(BenchmarkId id) {
    return registry()[static_cast<std::size_t>(id)];
}

double eval_function(BenchmarkId id, const Vector& x) {
    const BenchmarkFunction& fn = benchmark(id);
    if (x.size() != fn.arity) {
        throw std::invalid_argument(to_string(id) + " takes " + std::to_string(fn.arity) +
                                    " coordinates, got " + std::to_string(x.size()));
    }
    return fn.evaluate(x);
}

std::vector<Vector> grid_points(const DomainBox& box, int per_axis) {
    if (per_axis < 2) throw std::invalid_argument("grid: per_axis must be at least 2");
    const int d = box.dim();
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(per_axis);
    std::vector<Vector> pts;
    pts.reserve(total);
    std::vector<int> idx(static_cast<std::size_t>(d), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Vector x(d);
        for (int a = 0; a < d; ++a) {
            const auto [lo, hi] = box.axes[static_cast<std::size_t>(a)];
            const int k = idx[static_cast<std::size_t>(a)];
            x[a] = k == per_axis - 1 ? hi : lo + (hi - lo) * k / (per_axis - 1);
        }
        pts.push_back(std::move(x));
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[static_cast<std::size_t>(a)] < per_axis) break;
            idx[static_cast<std::size_t>(a)] = 0;
        }
    }
    return pts;
}

std::vector<Sample> make_grid(const BenchmarkFunction& fn, int per_axis) {
    std::vector<Sample> samples;
    for (Vector& x : grid_points(fn.box, per_axis)) {
        const double y = fn.evaluate(x);
        samples.push_back({std::move(x), y});
    }
    return samples;
}

std::vector<Vector> EvalLine::points() const {
    if (n_points < 2) throw std::invalid_argument("EvalLine: n_points must be at least 2");
    std::vector<Vector> pts;
    for (int k = 0; k < n_points; ++k) {
        const double t = static_cast<double>(k) / (n_points - 1);
        pts.push_back(k == n_points - 1 ? end : Vector(start + t * (end - start)));
    }
    return pts;
}

std::vector<EvalLine> cube_diagonals(const DomainBox& box, int n_points) {
    if (box.dim() != 3) {
        throw std::invalid_argument("cube_diagonals: box must be 3-D, got " + std::to_string(box.dim()));
    }
    const auto [l0, h0] = box.axes[0];
    const auto [l1, h1] = box.axes[1];
    const auto [l2, h2] = box.axes[2];
    auto v = [](double a, double b, double c) { return Vector{{a, b, c}}; };
    return {
        {"body_000_111", v(l0, l1, l2), v(h0, h1, h2), n_points},
        {"body_100_011", v(h0, l1, l2), v(l0, h1, h2), n_points},
        {"body_010_101", v(l0, h1, l2), v(h0, l1, h2), n_points},
        {"body_001_110", v(l0, l1, h2), v(h0, h1, l2), n_points},
        {"face_x1lo", v(l0, l1, l2), v(l0, h1, h2), n_points},
        {"face_x1hi", v(h0, l1, l2), v(h0, h1, h2), n_points},
        {"face_x2lo", v(l0, l1, l2), v(h0, l1, h2), n_points},
        {"face_x2hi", v(l0, h1, l2), v(h0, h1, h2), n_points},
    };
}

MseResult mse(std::span<const Prediction> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("mse: predictions and truth differ in length");
    }
    MseResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].empty) {
            ++r.n_empty;
            continue;
        }
        const double e = predictions[i].y_mean - truth[i];
        sum += e * e;
        ++r.n_valid;
    }
    if (!predictions.empty()) {
        r.empty_fraction = static_cast<double>(r.n_empty) / static_cast<double>(predictions.size());
    }
    if (r.n_valid > 0) r.mse = sum / static_cast<double>(r.n_valid);
    return r;
}

std::pair<double, double> function_range(const BenchmarkFunction& fn) {
    const int per_axis = fn.arity == 1 ? 2001 : fn.arity == 2 ? 201 : 61;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Vector& x : grid_points(fn.box, per_axis)) {
        const double y = fn.evaluate(x);
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    return {lo, hi};
}

void pad_y_range(BenchmarkPreset& preset, double fraction) {
    const auto [lo, hi] = function_range(benchmark(preset.id));
    const double pad = fraction * (hi - lo);
    preset.train.y_min = lo - pad;
    preset.train.y_max = hi + pad;
}

BenchmarkPreset default_preset(BenchmarkId id) {
    struct Row {
        double tol;
        int n_in, n_out, n_trials, n_epochs;
    };
    // tol, N_in-tol, N_out-tol, N_trials, N_epochs per function.
    static constexpr std::array<Row, 8> table{{
        {0.02, 10, 10, 1000, 500},
        {0.05, 10, 10, 1000, 500},
        {0.01, 10, 10, 1000, 500},
        {0.1, 30, 50, 300, 300},
        {0.1, 30, 50, 300, 300},
        {0.1, 30, 50, 1000, 500},
        {0.1, 30, 50, 1000, 500},
        {0.1, 30, 50, 1000, 500},
    }};
    const Row& row = table[static_cast<std::size_t>(id)];
    const int arity = benchmark(id).arity;

    BenchmarkPreset p;
    p.id = id;
    p.train.tol = row.tol;
    p.train.n_in_tol = row.n_in;
    p.train.n_out_tol = row.n_out;
    p.train.n_epochs = row.n_epochs;
    p.train.optimizer.kind = OptimizerKind::Adam;
    p.train.optimizer.learning_rate = 1e-2;
    p.train.loss_scale = LossScale(10.0);
    p.train.seed = 1;
    p.n_trials = row.n_trials;
    p.selection = SelectionMode::Auto;
    p.samples_per_axis = arity == 1 ? 20 : arity == 2 ? 25 : 15;
    p.eval_points = arity == 1 ? 200 : arity == 2 ? 15 : 50;
    pad_y_range(p, 0.2);
    return p;
}

EvalSet make_eval_set(const BenchmarkPreset& preset) {
    const BenchmarkFunction& fn = benchmark(preset.id);
    EvalSet eval;
    if (fn.arity == 3) {
        eval.lines = cube_diagonals(fn.box, preset.eval_points);
        for (std::size_t li = 0; li < eval.lines.size(); ++li) {
            for (Vector& x : eval.lines[li].points()) {
                eval.truth.push_back(fn.evaluate(x));
                eval.queries.push_back(std::move(x));
                eval.line_index.push_back(li);
            }
        }
        return eval;
    }
    // 1-D: dense sweep; 2-D: held-out grid.
    for (const Vector& x : grid_points(fn.box, preset.eval_points)) {
        eval.queries.push_back(x);
        eval.truth.push_back(fn.evaluate(x));
    }
    return eval;
}

RunOutcome run_pipeline(const BenchmarkPreset& preset, std::vector<Sample> samples, EvalSet eval,
                        const ProgressSink& progress) {
    RunOutcome out;
    out.samples = std::move(samples);
    out.eval = std::move(eval);
    const int input_dim = static_cast<int>(out.samples.front().x.size()) + 2;

    const auto t0 = std::chrono::steady_clock::now();
    FFModel model = init_model(preset.layer_sizes, input_dim, preset.train.seed);
    const ContrastiveDataset data = build_contrastive_dataset(out.samples, preset.train);
    out.trained = train(std::move(model), data, preset.train, progress);
    out.train_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    QueryConfig query = query_config_for(out.trained.model, preset.n_trials, preset.selection);
    if (preset.selection == SelectionMode::Auto) {
        store_calibration(out.trained.model, calibration_subset(out.samples), query);
    }
    out.predictions = predict_curve(out.trained.model, out.eval.queries, query);
    out.predict_seconds = seconds_since(t1);
    out.error = mse(out.predictions, out.eval.truth);
    return out;
}

RunOutcome run_benchmark(const BenchmarkPreset& preset, const ProgressSink& progress) {
    return run_pipeline(preset, make_grid(benchmark(preset.id), preset.samples_per_axis),
                        make_eval_set(preset), progress);
}

std::string to_string(SweepParam p) {
    switch (p) {
        case SweepParam::Tol: return "tol";
        case SweepParam::NOutTol: return "n_out_tol";
        case SweepParam::NEpochs: return "n_epochs";
        case SweepParam::YMin: return "y_min";
    }
    return "?";
}

SweepParam parse_sweep_param(const std::string& text) {
    for (SweepParam p : {SweepParam::Tol, SweepParam::NOutTol, SweepParam::NEpochs, SweepParam::YMin}) {
        if (to_string(p) == text) return p;
    }
    throw std::invalid_argument("unknown sweep parameter '" + text + "' (tol, n_out_tol, n_epochs, y_min)");
}

BenchmarkPreset apply_sweep_value(BenchmarkPreset base, SweepParam param, double value) {
    auto as_count = [&](const char* what) {
        if (value < 1.0 || value != std::floor(value)) {
            throw std::invalid_argument(std::string(what) + " must be a positive integer");
        }
        return static_cast<int>(value);
    };
    switch (param) {
        case SweepParam::Tol: base.train.tol = value; break;
        case SweepParam::NOutTol: base.train.n_out_tol = as_count("n_out_tol"); break;
        case SweepParam::NEpochs: base.train.n_epochs = as_count("n_epochs"); break;
        case SweepParam::YMin: base.train.y_min = value; break;
    }
    return base;
}

std::vector<SweepRow> sweep(const BenchmarkPreset& base, SweepParam param, std::span<const double> values,
                            const std::function<void(const SweepRow&)>& on_row) {
    if (values.empty()) throw std::invalid_argument("sweep: no values");
    std::vector<SweepRow> rows;
    for (double value : values) {
        SweepRow row;
        row.benchmark = base.id;
        row.param = param;
        row.value = value;
        row.seed = base.train.seed;
        const auto start = std::chrono::steady_clock::now();
        try {
            const RunOutcome run = run_benchmark(apply_sweep_value(base, param, value));
            row.error = run.error;
        } catch (const std::exception& e) {
            row.failure = e.what();
            row.error.empty_fraction = std::nan("");
        }
        row.wall_time_s = seconds_since(start);
        if (on_row) on_row(row);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string sweep_csv_header() { return "benchmark,param,value,mse,empty_fraction,wall_time_s,seed"; }

std::string sweep_csv_row(const SweepRow& row) {
    const double m = row.error.mse.value_or(std::nan(""));
    return to_string(row.benchmark) + "," + to_string(row.param) + "," + format_real(row.value) + "," +
           format_real(m) + "," + format_real(row.error.empty_fraction) + "," +
           format_real(row.wall_time_s, 6) + "," + std::to_string(row.seed);
}

ComparisonReport compare_ff_bp(const BenchmarkPreset& preset) {
    ComparisonReport r;
    r.benchmark = preset.id;
    r.epochs = preset.train.n_epochs;

    const RunOutcome ff = run_benchmark(preset);
    r.ff_time_s = ff.train_seconds;
    r.ff_mse = ff.error.mse;
    r.ff_parameters = ff.trained.model.parameter_count();

    BaselineOptions opts;
    opts.hidden_sizes = preset.layer_sizes;
    opts.epochs = preset.train.n_epochs;
    opts.learning_rate = preset.train.optimizer.learning_rate;
    opts.seed = preset.train.seed;
    const BaselineFit bp = train_baseline_bp(ff.samples, opts);
    r.bp_time_s = bp.wall_time_s;
    r.bp_parameters = bp.model.parameter_count();
    double sum = 0.0;
    for (std::size_t i = 0; i < ff.eval.queries.size(); ++i) {
        const double e = bp.model.predict(ff.eval.queries[i]) - ff.eval.truth[i];
        sum += e * e;
    }
    if (!ff.eval.queries.empty()) r.bp_mse = sum / static_cast<double>(ff.eval.queries.size());
    return r;
}

std::string comparison_csv_header() {
    return "benchmark,epochs,ff_time_s,bp_time_s,ff_mse,bp_mse,ff_parameters,bp_parameters";
}

std::string comparison_csv_row(const ComparisonReport& r) {
    return to_string(r.benchmark) + "," + std::to_string(r.epochs) + "," + format_real(r.ff_time_s, 6) + "," +
           format_real(r.bp_time_s, 6) + "," + format_real(r.ff_mse.value_or(std::nan(""))) + "," +
           format_real(r.bp_mse.value_or(std::nan(""))) + "," + std::to_string(r.ff_parameters) + "," +
           std::to_string(r.bp_parameters);
}

}  // namespace ffreg::bench
