#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "ffreg/core_math.hpp"
#include "ffreg/trainer.hpp"

namespace ffreg::bench {

/// Conventional regressor: GELU hidden layers and a linear scalar head,
/// trained jointly by backpropagation on mean squared error.
struct BaselineMLP {
    std::vector<Matrix> weights;  // weights[l] is out x in
    std::vector<Vector> biases;

    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    std::size_t parameter_count() const;
    double predict(const Vector& x) const;
    /// One prediction per row.
    Vector predict_batch(const Matrix& inputs) const;
};

BaselineMLP init_baseline(int input_dim, std::span<const int> hidden_sizes, std::uint64_t seed);

struct BaselineGradient {
    double loss = 0.0;
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

/// MSE over the rows of `inputs` and its gradient for every parameter.
BaselineGradient baseline_loss_gradient(const BaselineMLP& mlp, const Matrix& inputs, const Vector& targets);

struct BaselineOptions {
    std::vector<int> hidden_sizes{64, 128, 32};
    int epochs = 500;
    double learning_rate = 1e-2;
    std::uint64_t seed = 0;
};

struct BaselineFit {
    BaselineMLP model;
    std::vector<double> loss_history;
    long long parameter_updates = 0;
    double wall_time_s = 0.0;
};

class BaselineDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Full-batch Adam on (x, y_actual) pairs.
BaselineFit train_baseline_bp(std::span<const Sample> samples, const BaselineOptions& options);

}  // namespace ffreg::bench
