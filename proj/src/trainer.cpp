#include "ffreg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ffreg/random.hpp"

namespace ffreg {

namespace {

void fail(const std::string& field, const std::string& why) {
    throw std::invalid_argument("config field '" + field + "': " + why);
}

// Step p toward y until |p - y| <= tol holds in floating point.
double nudge_inside(double p, double y, double tol) {
    while (std::abs(p - y) > tol) p = std::nextafter(p, y);
    return p;
}

// Step p away from y until |p - y| > tol holds in floating point.
double nudge_outside(double p, double y, double tol) {
    const double away = p < y ? -INFINITY : INFINITY;
    while (std::abs(p - y) <= tol) p = std::nextafter(p, away);
    return p;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(tol > 0.0) || !std::isfinite(tol)) fail("tol", "must be positive");
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
        fail("y_min/y_max", "need finite y_min < y_max");
    }
    if (!(tol < (y_max - y_min) / 2.0)) fail("tol", "must be below (y_max - y_min)/2");
    if (n_in_tol < 1) fail("n_in_tol", "must be at least 1");
    if (n_out_tol < 1) fail("n_out_tol", "must be at least 1");
    if (n_epochs < 1) fail("n_epochs", "must be at least 1");
    if (!(optimizer.learning_rate > 0.0)) fail("learning_rate", "must be positive");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0)) fail("beta1", "must be in [0, 1)");
    if (!(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) fail("beta2", "must be in [0, 1)");
    if (!(optimizer.epsilon > 0.0)) fail("epsilon", "must be positive");
    if (minibatch_size < 0) fail("minibatch_size", "must be non-negative");
}

TrialPoints generate_trial_points(const Sample& sample, const TrainConfig& cfg,
                                  std::size_t sample_index) {
    const double y = sample.y_actual;
    const double tol = cfg.tol;
    const double below = y - cfg.y_min;  // room under the band centre
    const double above = cfg.y_max - y;
    auto describe = [&] {
        std::ostringstream os;
        os.precision(17);
        os << "sample " << sample_index << " (y_actual=" << y << ")";
        return os.str();
    };
    if (!std::isfinite(y)) {
        throw std::invalid_argument(describe() + ": non-finite y_actual");
    }
    if (below < tol || above < tol) {
        std::ostringstream os;
        os << describe() << ": tolerance band [" << y - tol << ", " << y + tol
           << "] exceeds [y_min, y_max] = [" << cfg.y_min << ", " << cfg.y_max << "]";
        throw std::invalid_argument(os.str());
    }
    const bool has_low = below > tol;
    const bool has_high = above > tol;
    if (!has_low && !has_high) {
        throw std::invalid_argument(describe() + ": tolerance band fills [y_min, y_max], no room for out-tol points");
    }

    TrialPoints out;
    const int n_in = cfg.n_in_tol;
    out.in_tol.reserve(static_cast<std::size_t>(n_in));
    if (n_in == 1) {
        out.in_tol.push_back(y);
    } else {
        for (int k = 0; k < n_in; ++k) {
            const double t = static_cast<double>(2 * k - (n_in - 1)) / static_cast<double>(n_in - 1);
            out.in_tol.push_back(nudge_inside(y + tol * t, y, tol));
        }
    }

    const double low_len = has_low ? below - tol : 0.0;
    const double high_len = has_high ? above - tol : 0.0;
    const int n_out = cfg.n_out_tol;
    int n_low = 0;
    if (has_low && has_high) {
        if (n_out == 1) {
            n_low = low_len >= high_len ? 1 : 0;
        } else {
            const double share = static_cast<double>(n_out) * low_len / (low_len + high_len);
            n_low = std::clamp(static_cast<int>(std::lround(share)), 1, n_out - 1);
        }
    } else if (has_low) {
        n_low = n_out;
    }
    const int n_high = n_out - n_low;

    out.out_tol.reserve(static_cast<std::size_t>(n_out));
    // [y_min, y - tol): starts at y_min, stops one spacing short of the band.
    for (int k = 0; k < n_low; ++k) {
        const double p = cfg.y_min + low_len * static_cast<double>(k) / static_cast<double>(n_low);
        out.out_tol.push_back(nudge_outside(p, y, tol));
    }
    // (y + tol, y_max]: one spacing past the band up to y_max.
    for (int k = 1; k <= n_high; ++k) {
        const double p = k == n_high ? cfg.y_max
                                     : y + tol + high_len * static_cast<double>(k) / static_cast<double>(n_high);
        out.out_tol.push_back(nudge_outside(p, y, tol));
    }
    return out;
}

ContrastiveDataset build_contrastive_dataset(std::span<const Sample> samples, const TrainConfig& cfg) {
    cfg.validate();
    ContrastiveDataset data;
    const std::size_t per_sample = static_cast<std::size_t>(cfg.n_in_tol + cfg.n_out_tol);
    data.positive.reserve(samples.size() * per_sample);
    data.negative.reserve(samples.size() * per_sample);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        if (i > 0 && s.x.size() != samples[0].x.size()) {
            throw std::invalid_argument("sample " + std::to_string(i) + ": x dimension differs from sample 0");
        }
        const TrialPoints trials = generate_trial_points(s, cfg, i);
        for (double y : trials.in_tol) {
            data.positive.push_back({s.x, y, 1.0});
            data.negative.push_back({s.x, y, 0.0});
        }
        for (double y : trials.out_tol) {
            data.positive.push_back({s.x, y, 0.0});
            data.negative.push_back({s.x, y, 1.0});
        }
    }
    return data;
}

Matrix to_input_matrix(std::span<const LabeledPoint> points) {
    if (points.empty()) return Matrix(0, 0);
    const Eigen::Index d = points.front().x.size();
    Matrix m(static_cast<Eigen::Index>(points.size()), d + 2);
    for (std::size_t r = 0; r < points.size(); ++r) {
        const auto row = static_cast<Eigen::Index>(r);
        if (points[r].x.size() != d) {
            throw std::invalid_argument("to_input_matrix: ragged x dimension at row " + std::to_string(r));
        }
        m.row(row).head(d) = points[r].x.transpose();
        m(row, d) = points[r].y_trial;
        m(row, d + 1) = points[r].label;
    }
    return m;
}

void optimizer_step(std::span<double> params, std::span<const double> gradient,
                    const OptimizerSettings& settings, OptimizerState& state) {
    if (params.size() != gradient.size()) {
        throw std::invalid_argument("optimizer_step: parameter/gradient size mismatch");
    }
    const double lr = settings.learning_rate;
    if (settings.kind == OptimizerKind::Sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * gradient[i];
        ++state.step;
        return;
    }
    if (state.first_moment.size() != params.size()) {
        state.first_moment.assign(params.size(), 0.0);
        state.second_moment.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double b1 = settings.beta1;
    const double b2 = settings.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        state.first_moment[i] = b1 * state.first_moment[i] + (1.0 - b1) * g;
        state.second_moment[i] = b2 * state.second_moment[i] + (1.0 - b2) * g * g;
        const double m_hat = state.first_moment[i] / c1;
        const double v_hat = state.second_moment[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + settings.epsilon);
    }
}

TrainingDivergedError::TrainingDivergedError(std::size_t layer, int epoch, double loss)
    : std::runtime_error("non-finite loss (" + std::to_string(loss) + ") at layer " +
                         std::to_string(layer) + ", epoch " + std::to_string(epoch)),
      layer_(layer),
      epoch_(epoch) {}

namespace {

std::span<double> as_span(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Matrix& m) {
    return {m.data(), static_cast<std::size_t>(m.size())};
}
std::span<const double> as_span(const Vector& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Matrix gather_rows(const RowMajorMatrix& m, std::span<const Eigen::Index> rows) {
    RowMajorMatrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
    return out;
}

}  // namespace

TrainResult train(FFModel model, const ContrastiveDataset& data, const TrainConfig& cfg,
                  const ProgressSink& progress) {
    cfg.validate();
    model.validate();
    if (data.positive.empty() || data.positive.size() != data.negative.size()) {
        throw std::invalid_argument("train: positive and negative sets must be non-empty and equal in size");
    }
    Matrix pos = to_input_matrix(data.positive);
    Matrix neg = to_input_matrix(data.negative);
    if (pos.cols() != model.input_dim) {
        throw std::invalid_argument("train: dataset rows have " + std::to_string(pos.cols()) +
                                    " columns, model input_dim is " + std::to_string(model.input_dim));
    }
    model.loss_scale = cfg.loss_scale;

    TrainResult result;
    const Eigen::Index n = pos.rows();
    const bool minibatch = cfg.minibatch_size > 0 && cfg.minibatch_size < n;
    SeededRng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        FFLayer& layer = model.layers[li];
        OptimizerState w_state;
        OptimizerState b_state;
        std::vector<double> history;
        history.reserve(static_cast<std::size_t>(cfg.n_epochs));

        auto update = [&](const Matrix& p, const Matrix& q, int epoch) {
            const LayerLossGradient g =
                layer_loss_gradient(layer.weights(), layer.bias(), layer.zeta(), p, q, cfg.loss_scale);
            if (!std::isfinite(g.loss) || !g.weights.allFinite() || !g.bias.allFinite()) {
                throw TrainingDivergedError(li, epoch, g.loss);
            }
            optimizer_step(as_span(layer.weights()), as_span(g.weights), cfg.optimizer, w_state);
            optimizer_step(as_span(layer.bias()), as_span(g.bias), cfg.optimizer, b_state);
            ++result.parameter_updates;
            return g.loss;
        };

        RowMajorMatrix pos_rows;
        RowMajorMatrix neg_rows;
        if (minibatch) {
            pos_rows = pos;
            neg_rows = neg;
        }
        for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
            double loss = 0.0;
            if (!minibatch) {
                loss = update(pos, neg, epoch);
            } else {
                // Fisher-Yates with the portable generator.
                for (std::size_t i = order.size() - 1; i > 0; --i) {
                    const auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % (i + 1));
                    std::swap(order[i], order[j]);
                }
                double weighted = 0.0;
                for (std::size_t start = 0; start < order.size();
                     start += static_cast<std::size_t>(cfg.minibatch_size)) {
                    const std::size_t len =
                        std::min(order.size() - start, static_cast<std::size_t>(cfg.minibatch_size));
                    const std::span<const Eigen::Index> rows(order.data() + start, len);
                    weighted += update(gather_rows(pos_rows, rows), gather_rows(neg_rows, rows), epoch) *
                                static_cast<double>(len);
                }
                loss = weighted / static_cast<double>(n);
            }
            history.push_back(loss);
            if (progress) progress({li, epoch, loss});
        }

        pos = layer_forward_batch(layer, pos);
        neg = layer_forward_batch(layer, neg);
        const double g_pos = cosine_similarity_rows(pos, layer.zeta()).mean();
        const double g_neg = cosine_similarity_rows(neg, layer.zeta()).mean();
        result.final_g_pos.push_back(g_pos);
        result.final_g_neg.push_back(g_neg);
        result.final_delta.push_back(g_pos - g_neg);
        result.loss_history.push_back(std::move(history));
    }

    TrainingInfo info;
    info.tol = cfg.tol;
    info.y_min = cfg.y_min;
    info.y_max = cfg.y_max;
    info.n_epochs = cfg.n_epochs;
    info.final_delta = result.final_delta;
    const Eigen::Index d = model.x_dim();
    for (Eigen::Index c = 0; c < d; ++c) {
        double lo = INFINITY;
        double hi = -INFINITY;
        for (const auto& p : data.positive) {
            lo = std::min(lo, p.x[c]);
            hi = std::max(hi, p.x[c]);
        }
        info.x_domain.emplace_back(lo, hi);
    }
    model.training = std::move(info);
    result.model = std::move(model);
    return result;
}

}  // namespace ffreg
