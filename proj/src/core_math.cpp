#include "ffreg/core_math.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ffreg {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;  // sqrt(2/pi)
constexpr double kGeluCubic = 0.044715;

double sigmoid(double u) {
    if (u >= 0.0) {
        return 1.0 / (1.0 + std::exp(-u));
    }
    const double e = std::exp(u);
    return e / (1.0 + e);
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                    std::to_string(a) + " vs " + std::to_string(b) + ")");
    }
}

}  // namespace

LossScale::LossScale(double theta) : theta_(theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw std::invalid_argument("loss scale must be a positive finite number");
    }
}

double gelu(double x) {
    const double inner = kSqrt2OverPi * (x + kGeluCubic * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(inner));
}

double gelu_derivative(double x) {
    const double x2 = x * x;
    const double t = std::tanh(kSqrt2OverPi * (x + kGeluCubic * x2 * x));
    const double dinner = kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x2);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

double cosine_similarity(const Vector& a, const Vector& b) {
    require_same_dim(a.size(), b.size(), "cosine_similarity");
    if (!a.allFinite() || !b.allFinite()) {
        throw std::invalid_argument("cosine_similarity: non-finite element");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na < kNormEpsilon || nb < kNormEpsilon) {
        return 0.0;
    }
    // Rounding can push |cos| a hair past 1 for parallel vectors.
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double layer_loss(double delta, LossScale scale) {
    const double u = -scale.theta() * delta;
    return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u)));
}

double layer_loss_slope(double delta, LossScale scale) {
    return -scale.theta() * sigmoid(-scale.theta() * delta);
}

namespace {

// tanh(u) = 1 - 2 / (exp(2u) + 1); Eigen vectorizes exp for doubles but not tanh.
// exp overflow to inf still gives the right limit.
template <typename In>
Eigen::ArrayXXd tanh_inner(const In& x) {
    const Eigen::ArrayXXd e = (2.0 * kSqrt2OverPi * (x + kGeluCubic * x.cube())).exp();
    return 1.0 - 2.0 / (e + 1.0);
}

}  // namespace

Matrix gelu(const Matrix& z) {
    const Eigen::ArrayXXd t = tanh_inner(z.array());
    return (0.5 * z.array() * (1.0 + t)).matrix();
}

void gelu_with_derivative(const Matrix& z, Matrix& value, Matrix& derivative) {
    const auto x = z.array();
    const Eigen::ArrayXXd t = tanh_inner(x);
    value = (0.5 * x * (1.0 + t)).matrix();
    derivative = (0.5 * (1.0 + t) +
                  0.5 * x * (1.0 - t.square()) * kSqrt2OverPi * (1.0 + 3.0 * kGeluCubic * x.square()))
                     .matrix();
}

Vector cosine_similarity_rows(const Matrix& rows, const Vector& direction) {
    require_same_dim(rows.cols(), direction.size(), "cosine_similarity_rows");
    const double dn = direction.norm();
    Vector out = Vector::Zero(rows.rows());
    if (dn < kNormEpsilon) {
        return out;
    }
    const Vector dots = rows * direction;
    const Vector norms = rows.rowwise().norm();
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        if (norms[k] >= kNormEpsilon) {
            out[k] = std::clamp(dots[k] / (norms[k] * dn), -1.0, 1.0);
        }
    }
    return out;
}

namespace {

struct SideTerms {
    Matrix activation_slope;  // gelu'(Z)
    Matrix output;            // Y
    Vector goodness;
    Vector inv_norm;          // 1/|y_k|, 0 for dead rows
};

template <typename Rows>
void forward_side(const Matrix& weights, const Vector& bias, const Vector& unit_zeta, const Rows& inputs,
                  Matrix& z, SideTerms& s) {
    z.noalias() = inputs * weights.transpose();
    z.rowwise() += bias.transpose();
    gelu_with_derivative(z, s.output, s.activation_slope);
    const Vector dots = s.output * unit_zeta;
    const Vector norms = s.output.rowwise().norm();
    s.goodness.setZero(inputs.rows());
    s.inv_norm.setZero(inputs.rows());
    for (Eigen::Index k = 0; k < inputs.rows(); ++k) {
        if (norms[k] >= kNormEpsilon) {
            s.inv_norm[k] = 1.0 / norms[k];
            s.goodness[k] = dots[k] * s.inv_norm[k];
        }
    }
}

// Accumulate d(loss)/d(params) for one side given d(loss)/d(g_k) in `coef`.
template <typename Rows>
void accumulate_side(const SideTerms& s, const Vector& unit_zeta, const Vector& coef, const Rows& inputs,
                     Matrix& dz, Matrix& grad_w, Vector& grad_b) {
    // dg/dy = zeta_hat/|y| - g y/|y|^2
    const Vector a = coef.cwiseProduct(s.inv_norm);
    const Vector c = coef.cwiseProduct(s.goodness).cwiseProduct(s.inv_norm).cwiseProduct(s.inv_norm);
    dz.noalias() = a * unit_zeta.transpose();
    dz.noalias() -= c.asDiagonal() * s.output;
    dz.array() *= s.activation_slope.array();
    grad_w.noalias() += dz.transpose() * inputs;
    grad_b.noalias() += dz.colwise().sum().transpose();
}

// Rows per block; keeps the per-block temporaries in cache.
constexpr Eigen::Index kBlockRows = 128;

}  // namespace

LayerLossGradient layer_loss_gradient(const Matrix& weights, const Vector& bias,
                                      const Vector& zeta, const Matrix& positive,
                                      const Matrix& negative, LossScale scale) {
    require_same_dim(weights.rows(), bias.size(), "layer_loss_gradient bias");
    require_same_dim(weights.rows(), zeta.size(), "layer_loss_gradient zeta");
    require_same_dim(weights.cols(), positive.cols(), "layer_loss_gradient positive input");
    require_same_dim(weights.cols(), negative.cols(), "layer_loss_gradient negative input");
    require_same_dim(positive.rows(), negative.rows(), "layer_loss_gradient batch");
    if (positive.rows() == 0) {
        throw std::invalid_argument("layer_loss_gradient: empty batch");
    }

    const double zn = zeta.norm();
    const Vector unit_zeta = zn >= kNormEpsilon ? Vector(zeta / zn) : Vector(Vector::Zero(zeta.size()));

    const Eigen::Index n = positive.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    LayerLossGradient out;
    out.weights = Matrix::Zero(weights.rows(), weights.cols());
    out.bias = Vector::Zero(bias.size());
    double sum_g_pos = 0.0;
    double sum_g_neg = 0.0;

    SideTerms pos;
    SideTerms neg;
    Matrix z;
    Matrix dz;
    Vector coef;
    for (Eigen::Index start = 0; start < n; start += kBlockRows) {
        const Eigen::Index len = std::min(kBlockRows, n - start);
        const auto p_rows = positive.middleRows(start, len);
        const auto n_rows = negative.middleRows(start, len);
        forward_side(weights, bias, unit_zeta, p_rows, z, pos);
        forward_side(weights, bias, unit_zeta, n_rows, z, neg);
        coef.resize(len);
        for (Eigen::Index k = 0; k < len; ++k) {
            const double delta = pos.goodness[k] - neg.goodness[k];
            out.loss += layer_loss(delta, scale);
            coef[k] = layer_loss_slope(delta, scale) * inv_n;
        }
        sum_g_pos += pos.goodness.sum();
        sum_g_neg += neg.goodness.sum();
        accumulate_side(pos, unit_zeta, coef, p_rows, dz, out.weights, out.bias);
        coef = -coef;
        accumulate_side(neg, unit_zeta, coef, n_rows, dz, out.weights, out.bias);
    }
    out.loss *= inv_n;
    out.mean_g_pos = sum_g_pos * inv_n;
    out.mean_g_neg = sum_g_neg * inv_n;
    return out;
}

}  // namespace ffreg
