#pragma once

#include <Eigen/Dense>

namespace ffreg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Norms below this are treated as a dead output with neutral goodness.
inline constexpr double kNormEpsilon = 1e-12;

/// The scalar multiplying the goodness gap inside the layer loss.
class LossScale {
public:
    LossScale() = default;
    explicit LossScale(double theta);

    double theta() const { return theta_; }

    friend bool operator==(const LossScale&, const LossScale&) = default;

private:
    double theta_ = 1.0;
};

/// GELU, tanh approximation.
double gelu(double x);
double gelu_derivative(double x);

/// a.b / (|a||b|); 0 when either norm is below kNormEpsilon.
double cosine_similarity(const Vector& a, const Vector& b);

/// softplus(-theta * delta), evaluated without overflow.
double layer_loss(double delta, LossScale scale = {});

/// d/d(delta) of layer_loss.
double layer_loss_slope(double delta, LossScale scale = {});

/// Elementwise GELU over a batch, optionally also returning the derivative.
Matrix gelu(const Matrix& z);
void gelu_with_derivative(const Matrix& z, Matrix& value, Matrix& derivative);

/// Row-wise cosine similarity of every row of `rows` with `direction`.
Vector cosine_similarity_rows(const Matrix& rows, const Vector& direction);

/// Loss and gradient of one dense+GELU layer under the contrastive loss.
///
/// Row k of `positive` and row k of `negative` form one pair; the loss is the
/// mean over pairs of layer_loss(g_pos[k] - g_neg[k]). Gradients are taken
/// with respect to this layer's weights and bias only.
struct LayerLossGradient {
    double loss = 0.0;
    double mean_g_pos = 0.0;
    double mean_g_neg = 0.0;
    Matrix weights;
    Vector bias;
};

LayerLossGradient layer_loss_gradient(const Matrix& weights, const Vector& bias,
                                      const Vector& zeta, const Matrix& positive,
                                      const Matrix& negative, LossScale scale);

}  // namespace ffreg
