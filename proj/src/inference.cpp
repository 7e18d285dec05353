#include "ffreg/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ffreg {

std::string to_string(SelectionMode mode) {
    switch (mode) {
        case SelectionMode::Direct: return "direct";
        case SelectionMode::Auto: return "auto";
        case SelectionMode::Inverted: break;
    }
    return "inverted";
}

SelectionMode parse_selection_mode(const std::string& text) {
    if (text == "inverted") return SelectionMode::Inverted;
    if (text == "direct") return SelectionMode::Direct;
    if (text == "auto") return SelectionMode::Auto;
    throw std::invalid_argument("selection mode must be inverted, direct or auto (got '" + text + "')");
}

void QueryConfig::validate() const {
    if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
        throw std::invalid_argument("query config: need finite y_min < y_max");
    }
    if (n_trials < 2) {
        throw std::invalid_argument("query config: n_trials must be at least 2");
    }
}

QueryConfig query_config_for(const FFModel& model, int n_trials, SelectionMode mode) {
    if (!model.training) {
        throw std::invalid_argument("model carries no training metadata; pass y_min/y_max explicitly");
    }
    QueryConfig cfg;
    cfg.y_min = model.training->y_min;
    cfg.y_max = model.training->y_max;
    cfg.n_trials = n_trials;
    cfg.selection_mode = mode;
    return cfg;
}

std::vector<double> trial_grid(const QueryConfig& cfg) {
    cfg.validate();
    std::vector<double> grid(static_cast<std::size_t>(cfg.n_trials));
    const double step = (cfg.y_max - cfg.y_min) / static_cast<double>(cfg.n_trials - 1);
    for (int k = 0; k < cfg.n_trials; ++k) {
        grid[static_cast<std::size_t>(k)] = cfg.y_min + step * static_cast<double>(k);
    }
    grid.back() = cfg.y_max;
    return grid;
}

LabelScores score_labels(const FFModel& model, const Vector& x_query, const QueryConfig& cfg) {
    if (x_query.size() + 2 != model.input_dim) {
        throw std::invalid_argument("score_labels: query has dim " + std::to_string(x_query.size()) +
                                    ", model expects " + std::to_string(model.input_dim - 2));
    }
    LabelScores scores;
    scores.trials = trial_grid(cfg);
    const auto n = static_cast<Eigen::Index>(scores.trials.size());
    const Eigen::Index d = x_query.size();
    Matrix inputs(n, d + 2);
    for (Eigen::Index k = 0; k < n; ++k) {
        inputs.row(k).head(d) = x_query.transpose();
        inputs(k, d) = scores.trials[static_cast<std::size_t>(k)];
    }
    inputs.col(d + 1).setOnes();
    scores.in_tol = total_goodness_batch(model, inputs);
    inputs.col(d + 1).setZero();
    scores.out_tol = total_goodness_batch(model, inputs);
    return scores;
}

std::vector<double> select_in_tol(const LabelScores& scores, SelectionRule rule) {
    std::vector<double> selected;
    for (std::size_t k = 0; k < scores.trials.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        const bool keep = rule == SelectionRule::Inverted ? scores.out_tol[i] > scores.in_tol[i]
                                                          : scores.in_tol[i] > scores.out_tol[i];
        if (keep) selected.push_back(scores.trials[k]);
    }
    return selected;
}

SelectionRule resolve_rule(const FFModel& model, SelectionMode mode) {
    switch (mode) {
        case SelectionMode::Direct: return SelectionRule::Direct;
        case SelectionMode::Inverted: return SelectionRule::Inverted;
        case SelectionMode::Auto: break;
    }
    if (model.training && model.training->calibrated_rule) {
        return *model.training->calibrated_rule;
    }
    return SelectionRule::Inverted;
}

namespace {

bool outside_training_box(const FFModel& model, const Vector& x) {
    if (!model.training || model.training->x_domain.size() != static_cast<std::size_t>(x.size())) {
        return false;
    }
    for (Eigen::Index c = 0; c < x.size(); ++c) {
        const auto& [lo, hi] = model.training->x_domain[static_cast<std::size_t>(c)];
        if (x[c] < lo || x[c] > hi) return true;
    }
    return false;
}

Prediction summarize(const Vector& x_query, std::vector<double> selected, SelectionRule rule) {
    Prediction p;
    p.x_query = x_query;
    p.rule = rule;
    p.n_selected = static_cast<int>(selected.size());
    p.empty = selected.empty();
    if (p.empty) {
        p.y_mean = p.y_std = p.ci_low = p.ci_high = std::nan("");
        return p;
    }
    double sum = 0.0;
    for (double y : selected) sum += y;
    const double n = static_cast<double>(selected.size());
    const auto [lo, hi] = std::minmax_element(selected.begin(), selected.end());
    const double mean = std::clamp(sum / n, *lo, *hi);
    double ss = 0.0;
    for (double y : selected) ss += (y - mean) * (y - mean);
    p.y_mean = mean;
    p.y_std = std::sqrt(ss / n);
    p.ci_low = mean - 2.0 * p.y_std;
    p.ci_high = mean + 2.0 * p.y_std;
    p.selected = std::move(selected);
    return p;
}

}  // namespace

Prediction predict(const FFModel& model, const Vector& x_query, const QueryConfig& cfg) {
    const SelectionRule rule = resolve_rule(model, cfg.selection_mode);
    const LabelScores scores = score_labels(model, x_query, cfg);
    Prediction p = summarize(x_query, select_in_tol(scores, rule), rule);
    p.extrapolated = outside_training_box(model, x_query);
    return p;
}

std::vector<Prediction> predict_curve(const FFModel& model, std::span<const Vector> x_queries,
                                      const QueryConfig& cfg) {
    std::vector<Prediction> out;
    out.reserve(x_queries.size());
    for (const Vector& x : x_queries) out.push_back(predict(model, x, cfg));
    return out;
}

SelectionCalibration calibrate_selection(const FFModel& model, std::span<const Sample> samples,
                                         const QueryConfig& cfg, double band) {
    if (samples.empty()) {
        throw std::invalid_argument("calibrate_selection: no samples");
    }
    const double spacing = (cfg.y_max - cfg.y_min) / static_cast<double>(cfg.n_trials - 1);
    const double reach = std::max(band, 0.5 * spacing);
    auto hit = [&](const std::vector<double>& selected, double y) {
        return std::any_of(selected.begin(), selected.end(),
                           [&](double t) { return std::abs(t - y) <= reach; });
    };
    int inverted_hits = 0;
    int direct_hits = 0;
    for (const Sample& s : samples) {
        const LabelScores scores = score_labels(model, s.x, cfg);
        inverted_hits += hit(select_in_tol(scores, SelectionRule::Inverted), s.y_actual) ? 1 : 0;
        direct_hits += hit(select_in_tol(scores, SelectionRule::Direct), s.y_actual) ? 1 : 0;
    }
    SelectionCalibration c;
    const double n = static_cast<double>(samples.size());
    c.agreement_inverted = inverted_hits / n;
    c.agreement_direct = direct_hits / n;
    c.rule = c.agreement_direct > c.agreement_inverted ? SelectionRule::Direct : SelectionRule::Inverted;
    return c;
}

std::vector<Sample> calibration_subset(std::span<const Sample> samples, std::size_t max_count) {
    if (samples.size() <= max_count) return {samples.begin(), samples.end()};
    std::vector<Sample> out;
    out.reserve(max_count);
    for (std::size_t i = 0; i < max_count; ++i) {
        out.push_back(samples[i * samples.size() / max_count]);
    }
    return out;
}

void store_calibration(FFModel& model, std::span<const Sample> samples, const QueryConfig& cfg) {
    if (!model.training) {
        throw std::invalid_argument("store_calibration: model has no training metadata");
    }
    const SelectionCalibration c = calibrate_selection(model, samples, cfg, model.training->tol);
    model.training->calibrated_rule = c.rule;
    model.training->agreement_inverted = c.agreement_inverted;
    model.training->agreement_direct = c.agreement_direct;
}

}  // namespace ffreg
