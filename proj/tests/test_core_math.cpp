#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "ffreg/core_math.hpp"
#include "ffreg/random.hpp"
#include "oracles.hpp"

using namespace ffreg;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

Matrix random_matrix(SeededRng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
    return m;
}

}  // namespace

TEST_CASE("gelu fixed points") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(std::abs(gelu(10.0) - 10.0) < 1e-6);
    CHECK(std::abs(gelu(-10.0)) < 1e-6);
    // 30-digit evaluation of the tanh form.
    CHECK(gelu(1.0) == doctest::Approx(0.841191990608276704781995777045).epsilon(1e-15));
    CHECK(gelu(-1.0) == doctest::Approx(-0.158808009391723295218004222955).epsilon(1e-15));
    CHECK(gelu(3.0) == doctest::Approx(2.99636260791822698116218353387).epsilon(1e-15));
}

TEST_CASE("gelu_derivative") {
    CHECK(gelu_derivative(0.0) == 0.5);
    CHECK(std::abs(gelu_derivative(10.0) - 1.0) < 1e-6);

    SeededRng rng(7);
    const double h = 1e-5;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform(-10.0, 10.0);
        const double fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
        // The derivative crosses zero near x = -0.75; the floor keeps that
        // point from turning rounding noise into a huge relative error.
        worst = std::max(worst, oracle::rel_error(gelu_derivative(x), fd, 1e-3));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("batch gelu agrees with the scalar form") {
    SeededRng rng(3);
    Matrix z = random_matrix(rng, 7, 5, 4.0);
    z(0, 0) = 400.0;
    z(0, 1) = -400.0;
    z(0, 2) = 0.0;
    Matrix value;
    Matrix deriv;
    gelu_with_derivative(z, value, deriv);
    const Matrix plain = gelu(z);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) {
            const double tol = 1e-14 * (1.0 + std::abs(z(i, j)));
            CHECK(std::abs(value(i, j) - gelu(z(i, j))) < tol);
            CHECK(plain(i, j) == value(i, j));
            CHECK(std::abs(deriv(i, j) - gelu_derivative(z(i, j))) < tol);
        }
    }
}

TEST_CASE("cosine similarity") {
    CHECK(cosine_similarity(vec({1, 0, 0}), vec({1, 0, 0})) == 1.0);
    CHECK(cosine_similarity(vec({1, 0}), vec({0, 1})) == 0.0);
    CHECK(cosine_similarity(vec({1, 1}), vec({1, 0})) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(cosine_similarity(vec({0, 0}), vec({1, 0})) == 0.0);
    CHECK(cosine_similarity(vec({1e-13, 0}), vec({1, 0})) == 0.0);
    CHECK_THROWS_AS(cosine_similarity(vec({1, 0}), vec({1, 0, 0})), std::invalid_argument);
    CHECK_THROWS_AS(cosine_similarity(vec({NAN, 0}), vec({1, 0})), std::invalid_argument);

    SUBCASE("symmetric, scale invariant, bounded") {
        SeededRng rng(11);
        for (int t = 0; t < 500; ++t) {
            const auto n = static_cast<Eigen::Index>(1 + t % 9);
            Vector a(n), b(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                a[i] = rng.normal();
                b[i] = rng.normal();
            }
            const double c = cosine_similarity(a, b);
            const double alpha = std::exp(rng.uniform(-5.0, 5.0));
            CHECK(c == cosine_similarity(b, a));
            CHECK(cosine_similarity(alpha * a, b) == doctest::Approx(c).epsilon(1e-12).scale(1e-12));
            CHECK(c >= -1.0);
            CHECK(c <= 1.0);
        }
        CHECK(cosine_similarity(vec({3, 4}), vec({6, 8})) <= 1.0);
        CHECK(cosine_similarity(vec({3, 4}), vec({-6, -8})) >= -1.0);
    }
}

TEST_CASE("cosine_similarity_rows matches the scalar form") {
    SeededRng rng(5);
    Matrix rows = random_matrix(rng, 6, 4);
    rows.row(2).setZero();
    const Vector dir = random_matrix(rng, 4, 1).col(0);
    const Vector c = cosine_similarity_rows(rows, dir);
    for (Eigen::Index k = 0; k < rows.rows(); ++k) {
        CHECK(c[k] == doctest::Approx(cosine_similarity(rows.row(k).transpose(), dir)).epsilon(1e-14));
    }
    CHECK(c[2] == 0.0);
}

TEST_CASE("layer loss") {
    CHECK(std::abs(layer_loss(0.0) - std::numbers::ln2) < 1e-12);
    CHECK(layer_loss(1e6) == 0.0);
    CHECK(layer_loss(-50.0) == doctest::Approx(50.0).epsilon(1e-15));
    CHECK(layer_loss(-1000.0) == doctest::Approx(1000.0).epsilon(1e-15));
    CHECK(std::isfinite(layer_loss(1000.0)));
    CHECK(layer_loss(0.5, LossScale(2.0)) == doctest::Approx(layer_loss(1.0)).epsilon(1e-15));
    CHECK_THROWS_AS(LossScale(0.0), std::invalid_argument);
    CHECK_THROWS_AS(LossScale(-1.0), std::invalid_argument);
    CHECK(LossScale().theta() == 1.0);

    SUBCASE("strictly decreasing") {
        SeededRng rng(19);
        for (int i = 0; i < 1000; ++i) {
            double a = rng.uniform(-30.0, 30.0);
            double b = rng.uniform(-30.0, 30.0);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            CHECK(layer_loss(a) > layer_loss(b));
        }
    }

    SUBCASE("slope matches finite difference") {
        for (double d : {-3.0, -0.4, 0.0, 0.7, 2.5}) {
            for (double theta : {1.0, 10.0}) {
                const LossScale s(theta);
                const double h = 1e-6;
                const double fd = (layer_loss(d + h, s) - layer_loss(d - h, s)) / (2 * h);
                CHECK(oracle::rel_error(layer_loss_slope(d, s), fd) < 1e-7);
            }
        }
    }
}

TEST_CASE("layer gradient against finite differences") {
    SeededRng rng(2024);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto in = static_cast<Eigen::Index>(1 + rng.next_u64() % 8);
        const auto out = static_cast<Eigen::Index>(1 + rng.next_u64() % 8);
        const auto batch = static_cast<Eigen::Index>(1 + rng.next_u64() % 16);
        const Matrix w = random_matrix(rng, out, in, 0.8);
        const Vector b = random_matrix(rng, out, 1, 0.3).col(0);
        const Vector zeta = random_matrix(rng, out, 1).col(0);
        const Matrix pos = random_matrix(rng, batch, in);
        const Matrix neg = random_matrix(rng, batch, in);
        const double theta = trial % 2 == 0 ? 1.0 : 3.0;

        const LayerLossGradient g = layer_loss_gradient(w, b, zeta, pos, neg, LossScale(theta));
        const oracle::FdGradient fd = oracle::fd_layer_gradient(w, b, zeta, pos, neg, theta);
        CHECK(g.loss == doctest::Approx(oracle::layer_loss(w, b, zeta, pos, neg, theta)).epsilon(1e-12));
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            worst = std::max(worst, oracle::rel_error(g.weights.data()[i], fd.weights.data()[i]));
        }
        for (Eigen::Index i = 0; i < b.size(); ++i) {
            worst = std::max(worst, oracle::rel_error(g.bias[i], fd.bias[i]));
        }
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("layer gradient, blocked batches agree with a single pass") {
    // More rows than one internal block, so the accumulation crosses blocks.
    SeededRng rng(8);
    const Matrix w = random_matrix(rng, 5, 3, 0.7);
    const Vector b = random_matrix(rng, 5, 1, 0.1).col(0);
    const Vector zeta = random_matrix(rng, 5, 1).col(0);
    const Matrix pos = random_matrix(rng, 300, 3);
    const Matrix neg = random_matrix(rng, 300, 3);
    const LayerLossGradient all = layer_loss_gradient(w, b, zeta, pos, neg, LossScale(2.0));
    Matrix gw = Matrix::Zero(5, 3);
    Vector gb = Vector::Zero(5);
    double loss = 0.0;
    for (Eigen::Index k = 0; k < 300; ++k) {
        const LayerLossGradient one =
            layer_loss_gradient(w, b, zeta, pos.middleRows(k, 1), neg.middleRows(k, 1), LossScale(2.0));
        gw += one.weights / 300.0;
        gb += one.bias / 300.0;
        loss += one.loss / 300.0;
    }
    CHECK(all.loss == doctest::Approx(loss).epsilon(1e-12));
    CHECK((all.weights - gw).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((all.bias - gb).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("layer gradient edge cases") {
    SUBCASE("single flipped pair matches the oracle") {
        SeededRng rng(1);
        const Matrix w = random_matrix(rng, 4, 3);
        const Vector b = Vector::Zero(4);
        const Vector zeta = random_matrix(rng, 4, 1).col(0);
        Matrix pos(1, 3);
        pos << 0.3, -0.2, 1.0;
        Matrix neg = pos;
        neg(0, 2) = 0.0;
        const LayerLossGradient g = layer_loss_gradient(w, b, zeta, pos, neg, LossScale());
        const oracle::FdGradient fd = oracle::fd_layer_gradient(w, b, zeta, pos, neg, 1.0);
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            CHECK(oracle::rel_error(g.weights.data()[i], fd.weights.data()[i]) < 1e-6);
        }
    }

    SUBCASE("saturated loss has a vanishing gradient") {
        // Positive rows map onto zeta, negative rows onto -zeta.
        Matrix w = Matrix::Identity(2, 2) * 5.0;
        const Vector b = Vector::Zero(2);
        const Vector zeta = vec({1.0, 1.0});
        Matrix pos(3, 2);
        pos << 1, 1, 2, 2, 3, 3;
        const Matrix neg = -pos;
        const LayerLossGradient g = layer_loss_gradient(w, b, zeta, pos, neg, LossScale(20.0));
        CHECK(g.loss < 1e-8);
        CHECK(g.weights.norm() < 1e-6);
        CHECK(g.mean_g_pos > 0.99);
    }

    SUBCASE("dimension mismatch") {
        const Matrix w = Matrix::Ones(2, 3);
        CHECK_THROWS_AS(layer_loss_gradient(w, Vector::Zero(3), Vector::Ones(2), Matrix::Ones(1, 3),
                                            Matrix::Ones(1, 3), LossScale()),
                        std::invalid_argument);
        CHECK_THROWS_AS(layer_loss_gradient(w, Vector::Zero(2), Vector::Ones(2), Matrix::Ones(1, 2),
                                            Matrix::Ones(1, 2), LossScale()),
                        std::invalid_argument);
        CHECK_THROWS_AS(layer_loss_gradient(w, Vector::Zero(2), Vector::Ones(2), Matrix::Ones(2, 3),
                                            Matrix::Ones(1, 3), LossScale()),
                        std::invalid_argument);
    }
}

TEST_CASE("seeded rng is reproducible") {
    SeededRng a(42);
    SeededRng b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    SeededRng c(1);
    double lo = 1.0, hi = 0.0, mean = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = c.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        mean += u / 20000.0;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}
