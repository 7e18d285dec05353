#pragma once

// Slow, loop-based reference implementations used as test oracles. Written
// without touching the library's math so a shared mistake cannot cancel out.

#include <cmath>
#include <numbers>
#include <vector>

#include "ffreg/core_math.hpp"

namespace oracle {

using ffreg::Matrix;
using ffreg::Vector;

// Long double keeps the finite-difference quotient well above rounding noise.
using Real = long double;

inline Real gelu(Real x) {
    const Real c = std::sqrt(2.0L / std::numbers::pi_v<Real>);
    return 0.5L * x * (1.0L + std::tanh(c * (x + 0.044715L * x * x * x)));
}

inline Real cosine(const std::vector<Real>& a, const std::vector<Real>& b) {
    Real ab = 0.0L, aa = 0.0L, bb = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

inline std::vector<Real> layer_out(const Matrix& w, const Vector& b, const Matrix& inputs, Eigen::Index row,
                                   Eigen::Index bump_o = -1, Eigen::Index bump_i = -1, Real bump = 0.0L) {
    std::vector<Real> y(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
        Real z = b[o];
        if (o == bump_o && bump_i < 0) z += bump;
        for (Eigen::Index i = 0; i < w.cols(); ++i) {
            Real wi = w(o, i);
            if (o == bump_o && i == bump_i) wi += bump;
            z += wi * inputs(row, i);
        }
        y[static_cast<std::size_t>(o)] = gelu(z);
    }
    return y;
}

/// Mean of log(1 + exp(-theta (g_pos - g_neg))) over the row pairs, with one
/// parameter shifted by `bump` (bias when bump_i < 0).
inline Real layer_loss_at(const Matrix& w, const Vector& b, const Vector& zeta, const Matrix& pos,
                          const Matrix& neg, double theta, Eigen::Index bump_o = -1, Eigen::Index bump_i = -1,
                          Real bump = 0.0L) {
    const std::vector<Real> z(zeta.data(), zeta.data() + zeta.size());
    Real total = 0.0L;
    for (Eigen::Index k = 0; k < pos.rows(); ++k) {
        const Real delta = cosine(layer_out(w, b, pos, k, bump_o, bump_i, bump), z) -
                           cosine(layer_out(w, b, neg, k, bump_o, bump_i, bump), z);
        total += std::log1p(std::exp(-theta * delta));
    }
    return total / static_cast<Real>(pos.rows());
}

inline double layer_loss(const Matrix& w, const Vector& b, const Vector& zeta, const Matrix& pos,
                         const Matrix& neg, double theta) {
    return static_cast<double>(layer_loss_at(w, b, zeta, pos, neg, theta));
}

struct FdGradient {
    Matrix weights;
    Vector bias;
};

/// Central differences of the long-double loss over every weight and bias.
inline FdGradient fd_layer_gradient(const Matrix& w, const Vector& b, const Vector& zeta, const Matrix& pos,
                                    const Matrix& neg, double theta, Real h = 1e-6L) {
    FdGradient g{Matrix(w.rows(), w.cols()), Vector(b.size())};
    auto diff = [&](Eigen::Index o, Eigen::Index i) {
        const Real up = layer_loss_at(w, b, zeta, pos, neg, theta, o, i, h);
        const Real down = layer_loss_at(w, b, zeta, pos, neg, theta, o, i, -h);
        return static_cast<double>((up - down) / (2.0L * h));
    };
    for (Eigen::Index o = 0; o < w.rows(); ++o) {
        for (Eigen::Index i = 0; i < w.cols(); ++i) g.weights(o, i) = diff(o, i);
        g.bias[o] = diff(o, -1);
    }
    return g;
}

/// Relative error with an absolute floor so near-zero entries do not blow up.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// The benchmark formulas, transcribed a second time without looking at src/.
inline double f1(double x) { return std::sin(2 * std::numbers::pi * x) + 1; }
inline double f2(double x) { return std::exp(-0.3 * x) * std::cos(std::numbers::pi * x / 2); }
inline double f3(double x) { return std::sin(std::numbers::pi * x) + std::cos(2 * std::numbers::pi * x) / 2; }
inline double f4(double a, double b) { return std::pow(a, 2) + std::pow(b, 2); }
inline double f5(double a, double b) { return 2 * std::sin(a) + std::cos(b); }
inline double f6(double a, double b, double c) { return std::pow(a, 2) + std::pow(b, 2) + std::pow(c, 2); }
inline double f7(double a, double b, double c) {
    return std::sin(a * b / 5) + std::pow(std::cos(c / 5), 2) + a * b * c;
}
inline double f8(double a, double b, double c) {
    return std::exp(a * a / 5) * std::sin(b * c / 5) + std::exp(b * b / 5) * std::sin(a * c / 5) +
           std::exp(c * c / 5) * std::sin(a * b / 5);
}

}  // namespace oracle
