#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ffreg/core_math.hpp"
#include "ffreg/network.hpp"

namespace ffreg {

/// A training observation (x_actual, y_actual).
struct Sample {
    Vector x;
    double y_actual = 0.0;
};

/// Network input triple; label is exactly 1.0 (in-tol) or 0.0 (out-tol).
struct LabeledPoint {
    Vector x;
    double y_trial = 0.0;
    double label = 0.0;

    friend bool operator==(const LabeledPoint& a, const LabeledPoint& b) {
        return a.x.size() == b.x.size() && a.x == b.x && a.y_trial == b.y_trial &&
               a.label == b.label;
    }
};

enum class OptimizerKind { Sgd, Adam };

struct OptimizerSettings {
    OptimizerKind kind = OptimizerKind::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    double tol = 0.01;
    double y_min = -1.0;
    double y_max = 1.0;
    int n_in_tol = 10;
    int n_out_tol = 10;
    int n_epochs = 500;
    OptimizerSettings optimizer;
    LossScale loss_scale;
    std::uint64_t seed = 0;
    /// 0 means full batch.
    int minibatch_size = 0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct TrialPoints {
    std::vector<double> in_tol;
    std::vector<double> out_tol;
};

/// In-tol and out-tol trial values around one sample. `sample_index` only
/// feeds the error message.
TrialPoints generate_trial_points(const Sample& sample, const TrainConfig& cfg,
                                  std::size_t sample_index = 0);

struct ContrastiveDataset {
    std::vector<LabeledPoint> positive;
    std::vector<LabeledPoint> negative;
};

ContrastiveDataset build_contrastive_dataset(std::span<const Sample> samples, const TrainConfig& cfg);

/// Rows of (x..., y_trial, label).
Matrix to_input_matrix(std::span<const LabeledPoint> points);

/// Per-parameter-block optimizer memory.
struct OptimizerState {
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    long long step = 0;
};

void optimizer_step(std::span<double> params, std::span<const double> gradient,
                    const OptimizerSettings& settings, OptimizerState& state);

struct TrainProgress {
    std::size_t layer = 0;
    int epoch = 0;
    double loss = 0.0;
};

using ProgressSink = std::function<void(const TrainProgress&)>;

struct TrainResult {
    FFModel model;
    /// loss_history[layer][epoch], evaluated before that epoch's update.
    std::vector<std::vector<double>> loss_history;
    std::vector<double> final_g_pos;
    std::vector<double> final_g_neg;
    /// Per-layer mean of g_pos - g_neg with the final parameters.
    std::vector<double> final_delta;
    long long parameter_updates = 0;
};

class TrainingDivergedError : public std::runtime_error {
public:
    TrainingDivergedError(std::size_t layer, int epoch, double loss);
    std::size_t layer() const { return layer_; }
    int epoch() const { return epoch_; }

private:
    std::size_t layer_;
    int epoch_;
};

/// Trains layers strictly in order; layer i sees only the frozen outputs of
/// layer i-1 on the positive and negative sets.
TrainResult train(FFModel model, const ContrastiveDataset& data, const TrainConfig& cfg,
                  const ProgressSink& progress = {});

}  // namespace ffreg
