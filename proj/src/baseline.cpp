#include "ffreg/baseline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "ffreg/random.hpp"

namespace ffreg::bench {

std::size_t BaselineMLP::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
    }
    return n;
}

Vector BaselineMLP::predict_batch(const Matrix& inputs) const {
    if (inputs.cols() != input_dim()) {
        throw std::invalid_argument("baseline: input has dim " + std::to_string(inputs.cols()) +
                                    ", expected " + std::to_string(input_dim()));
    }
    Matrix a = inputs;
    const std::size_t last = weights.size() - 1;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        Matrix z = a * weights[l].transpose();
        z.rowwise() += biases[l].transpose();
        a = l == last ? z : gelu(z);
    }
    return a.col(0);
}

double BaselineMLP::predict(const Vector& x) const {
    return predict_batch(x.transpose())[0];
}

BaselineMLP init_baseline(int input_dim, std::span<const int> hidden_sizes, std::uint64_t seed) {
    if (input_dim < 1 || hidden_sizes.empty()) {
        throw std::invalid_argument("init_baseline: need input_dim >= 1 and at least one hidden layer");
    }
    SeededRng rng(seed);
    BaselineMLP mlp;
    int fan_in = input_dim;
    auto add_layer = [&](int out) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(out, fan_in);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-bound, bound);
        mlp.weights.push_back(std::move(w));
        mlp.biases.push_back(Vector::Zero(out));
        fan_in = out;
    };
    for (int h : hidden_sizes) {
        if (h < 1) throw std::invalid_argument("init_baseline: hidden sizes must be positive");
        add_layer(h);
    }
    add_layer(1);
    return mlp;
}

BaselineGradient baseline_loss_gradient(const BaselineMLP& mlp, const Matrix& inputs, const Vector& targets) {
    if (inputs.rows() != targets.size() || inputs.rows() == 0) {
        throw std::invalid_argument("baseline_loss_gradient: need one target per (non-empty) input row");
    }
    if (inputs.cols() != mlp.input_dim()) {
        throw std::invalid_argument("baseline_loss_gradient: input dimension mismatch");
    }
    const std::size_t n_layers = mlp.weights.size();
    std::vector<Matrix> activations{inputs};
    std::vector<Matrix> slopes;
    for (std::size_t l = 0; l < n_layers; ++l) {
        Matrix z = activations.back() * mlp.weights[l].transpose();
        z.rowwise() += mlp.biases[l].transpose();
        if (l + 1 == n_layers) {
            activations.push_back(std::move(z));
        } else {
            Matrix value;
            Matrix slope;
            gelu_with_derivative(z, value, slope);
            activations.push_back(std::move(value));
            slopes.push_back(std::move(slope));
        }
    }
    const Vector residual = activations.back().col(0) - targets;
    const double inv_n = 1.0 / static_cast<double>(inputs.rows());

    BaselineGradient g;
    g.loss = residual.squaredNorm() * inv_n;
    g.weights.resize(n_layers);
    g.biases.resize(n_layers);
    Matrix delta = (2.0 * inv_n) * residual;  // d loss / d z for the head
    for (std::size_t l = n_layers; l-- > 0;) {
        g.weights[l] = delta.transpose() * activations[l];
        g.biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            delta = (delta * mlp.weights[l]).cwiseProduct(slopes[l - 1]);
        }
    }
    return g;
}

BaselineFit train_baseline_bp(std::span<const Sample> samples, const BaselineOptions& options) {
    if (samples.empty()) throw std::invalid_argument("train_baseline_bp: no samples");
    if (options.epochs < 1) throw std::invalid_argument("train_baseline_bp: epochs must be at least 1");
    if (!(options.learning_rate > 0.0)) throw std::invalid_argument("train_baseline_bp: learning rate must be positive");

    const auto d = samples.front().x.size();
    Matrix inputs(static_cast<Eigen::Index>(samples.size()), d);
    Vector targets(static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        inputs.row(static_cast<Eigen::Index>(i)) = samples[i].x.transpose();
        targets[static_cast<Eigen::Index>(i)] = samples[i].y_actual;
    }

    BaselineFit fit;
    const auto start = std::chrono::steady_clock::now();
    fit.model = init_baseline(static_cast<int>(d), options.hidden_sizes, options.seed);
    OptimizerSettings adam;
    adam.learning_rate = options.learning_rate;
    std::vector<OptimizerState> w_state(fit.model.weights.size());
    std::vector<OptimizerState> b_state(fit.model.weights.size());
    for (int epoch = 0; epoch < options.epochs; ++epoch) {
        const BaselineGradient g = baseline_loss_gradient(fit.model, inputs, targets);
        if (!std::isfinite(g.loss)) {
            throw BaselineDivergedError("baseline: non-finite loss at epoch " + std::to_string(epoch));
        }
        fit.loss_history.push_back(g.loss);
        for (std::size_t l = 0; l < fit.model.weights.size(); ++l) {
            Matrix& w = fit.model.weights[l];
            Vector& b = fit.model.biases[l];
            optimizer_step({w.data(), static_cast<std::size_t>(w.size())},
                           {g.weights[l].data(), static_cast<std::size_t>(g.weights[l].size())}, adam, w_state[l]);
            optimizer_step({b.data(), static_cast<std::size_t>(b.size())},
                           {g.biases[l].data(), static_cast<std::size_t>(g.biases[l].size())}, adam, b_state[l]);
        }
        ++fit.parameter_updates;
    }
    fit.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return fit;
}

}  // namespace ffreg::bench
