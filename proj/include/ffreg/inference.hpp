#pragma once

#include <span>
#include <string>
#include <vector>

#include "ffreg/core_math.hpp"
#include "ffreg/network.hpp"
#include "ffreg/trainer.hpp"

namespace ffreg {

/// `Auto` defers to the rule calibrated against training samples and stored
/// in the model; models without a calibration fall back to `Inverted`.
enum class SelectionMode { Inverted, Direct, Auto };

std::string to_string(SelectionMode mode);
SelectionMode parse_selection_mode(const std::string& text);

struct QueryConfig {
    double y_min = -1.0;
    double y_max = 1.0;
    int n_trials = 1000;
    SelectionMode selection_mode = SelectionMode::Inverted;

    void validate() const;
};

/// Query config whose trial range comes from the model's training metadata.
QueryConfig query_config_for(const FFModel& model, int n_trials, SelectionMode mode);

std::vector<double> trial_grid(const QueryConfig& cfg);

/// Summed goodness of every trial under each label.
struct LabelScores {
    std::vector<double> trials;
    Vector in_tol;   // label 1.0
    Vector out_tol;  // label 0.0
};

LabelScores score_labels(const FFModel& model, const Vector& x_query, const QueryConfig& cfg);

/// Strict comparison: tied trials are never selected.
std::vector<double> select_in_tol(const LabelScores& scores, SelectionRule rule);

SelectionRule resolve_rule(const FFModel& model, SelectionMode mode);

struct Prediction {
    Vector x_query;
    double y_mean = 0.0;
    double y_std = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_selected = 0;
    bool empty = true;
    /// x_query lies outside the box spanned by the training samples.
    bool extrapolated = false;
    SelectionRule rule = SelectionRule::Inverted;
    std::vector<double> selected;
};

Prediction predict(const FFModel& model, const Vector& x_query, const QueryConfig& cfg);

std::vector<Prediction> predict_curve(const FFModel& model, std::span<const Vector> x_queries,
                                      const QueryConfig& cfg);

/// Agreement of each rule with the training data: the fraction of samples for
/// which some selected trial lies within `band` of y_actual.
struct SelectionCalibration {
    SelectionRule rule = SelectionRule::Inverted;
    double agreement_inverted = 0.0;
    double agreement_direct = 0.0;
};

SelectionCalibration calibrate_selection(const FFModel& model, std::span<const Sample> samples,
                                         const QueryConfig& cfg, double band);

/// Evenly strided subset of at most `max_count` samples, order preserved.
std::vector<Sample> calibration_subset(std::span<const Sample> samples, std::size_t max_count = 200);

/// Runs calibrate_selection and records the outcome in model.training.
void store_calibration(FFModel& model, std::span<const Sample> samples, const QueryConfig& cfg);

}  // namespace ffreg
