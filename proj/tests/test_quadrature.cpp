#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "znh/models.hpp"
#include "znh/quadrature.hpp"

using namespace znh;
using std::numbers::pi;

namespace {

// Triangle integral of cos(ws) - cos(ws') over 0 <= s' <= s <= t, from the
// antiderivatives of s cos(ws) and sin(ws)/w.
double cos_difference_triangle(double w, double t) {
    return 2.0 * (std::cos(w * t) - 1.0) / (w * w) + t * std::sin(w * t) / w;
}

// Brute-force nested trapezoid over the triangle; independent of the
// Gauss-Legendre machinery and of the closed form above.
double brute_force_triangle(const std::function<double(double, double)>& g, double t, int n) {
    const double h = t / n;
    double outer = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double s = i * h;
        double inner = 0.0;
        for (int j = 0; j <= i; ++j) {
            const double w = (j == 0 || j == i) ? 0.5 : 1.0;
            inner += w * g(s, j * h);
        }
        inner *= h;
        outer += ((i == 0 || i == n) ? 0.5 : 1.0) * inner;
    }
    return outer * h;
}

}  // namespace

TEST_CASE("Gauss-Legendre rules") {
    for (int order : {2, 5, 8, 16, 33, 64}) {
        const auto& rule = gauss_legendre(order);
        double weight_sum = 0.0;
        double top_moment = 0.0;  // x^(2n-2) is integrated exactly
        for (int i = 0; i < order; ++i) {
            weight_sum += rule.weights[i];
            top_moment += rule.weights[i] * std::pow(rule.nodes[i], 2 * order - 2);
        }
        CHECK(weight_sum == doctest::Approx(2.0).epsilon(1e-14));
        CHECK(top_moment == doctest::Approx(2.0 / (2 * order - 1)).epsilon(1e-12));
        for (int i = 1; i < order; ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
    }
    CHECK_THROWS_AS(gauss_legendre(1), DomainError);
    CHECK_THROWS_AS(gauss_legendre(65), DomainError);
}

TEST_CASE("integrate_matrix examples") {
    const CMatrix sx = pauli::x();
    const double w = 3.0;
    SUBCASE("constant integrand") {
        const auto f = [&](double) -> CMatrix { return sx; };
        CHECK(max_abs(integrate_matrix(f, 0.0, 2.5, {}, 0.0) - 2.5 * sx) <= 1e-14);
        CHECK(max_abs(integrate_matrix(f, 0.0, 2.5) - 2.5 * sx) <= 1e-13);
    }
    SUBCASE("cosine over a full period") {
        const auto f = [&](double s) -> CMatrix { return std::cos(w * s) * sx; };
        CHECK(max_abs(integrate_matrix(f, 0.0, 2.0 * pi / w, {}, w)) <= 1e-14);
    }
    SUBCASE("sine over a partial interval") {
        const auto f = [&](double s) -> CMatrix { return std::sin(w * s) * sx; };
        for (double t : {0.1, 0.77, 1.9, 5.3}) {
            const CMatrix expected = ((1.0 - std::cos(w * t)) / w) * sx;
            CHECK(max_abs(integrate_matrix(f, 0.0, t, {}, w) - expected) <= 1e-13);
        }
    }
    SUBCASE("empty interval and reversed limits") {
        const auto f = [&](double) -> CMatrix { return sx; };
        CHECK(max_abs(integrate_matrix(f, 1.0, 1.0)) == 0.0);
        CHECK_THROWS_AS(integrate_matrix(f, 1.0, 0.5), DomainError);
    }
}

TEST_CASE("integrate_matrix is linear") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 20; ++trial) {
        const auto f = znh::testing::random_fourier(rng, 3, 2, 1.0);
        const auto g = znh::testing::random_fourier(rng, 3, 2, 1.0);
        const double alpha = 0.3 + trial * 0.1;
        const double beta = -1.7 + trial * 0.05;
        const double wmax = std::max(f.max_frequency(), g.max_frequency());
        const auto combo = [&](double s) -> CMatrix { return alpha * f(s) + beta * g(s); };
        const auto ff = [&](double s) -> CMatrix { return f(s); };
        const auto gg = [&](double s) -> CMatrix { return g(s); };
        const CMatrix lhs = integrate_matrix(combo, 0.0, 2.3, {}, wmax);
        const CMatrix rhs = alpha * integrate_matrix(ff, 0.0, 2.3, {}, wmax) + beta * integrate_matrix(gg, 0.0, 2.3, {}, wmax);
        CHECK(max_abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("doubling panels does not increase the error estimate") {
    const auto f = [](double s) -> CMatrix {
        CMatrix m(1, 1);
        m(0, 0) = std::exp(Complex(0.0, 5.0 * s)) * std::cos(2.0 * s);
        return m;
    };
    QuadratureConfig coarse;
    coarse.panels_per_period = 1;
    coarse.nodes_per_panel = 4;
    coarse.abs_tol = 1e-300;  // never satisfied: run the full ladder
    coarse.max_refinements = 1;
    double previous = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= 64; p *= 2) {
        coarse.panels_per_period = p;
        double err = 0.0;
        try {
            err = integrate_matrix_estimate(f, 0.0, 4.0, coarse, 7.0).error;
        } catch (const QuadratureError& e) {
            err = e.achieved_error();
        }
        CHECK(err <= previous + 1e-15);
        previous = err;
    }
}

TEST_CASE("non-convergence raises QuadratureError with the last estimate") {
    const auto f = [](double s) -> CMatrix { return std::sin(400.0 * s) * pauli::x(); };
    QuadratureConfig cfg;
    cfg.max_refinements = 2;
    try {
        (void)integrate_matrix(f, 0.0, 10.0, cfg, 0.0);
        FAIL("expected QuadratureError");
    } catch (const QuadratureError& e) {
        CHECK(e.last_estimate().rows() == 2);
        CHECK(e.achieved_error() > cfg.abs_tol);
    }
}

TEST_CASE("config validation") {
    QuadratureConfig cfg;
    cfg.nodes_per_panel = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.abs_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.panels_per_period = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("integrate_double_scalar examples") {
    const auto one = [](double, double) { return Complex(1.0); };
    CHECK(std::abs(integrate_double_scalar(one, 0.0, 1.7, {}, 0.0) - 0.5 * 1.7 * 1.7) <= 1e-14);

    const auto product = [](double s, double sp) { return Complex(s * sp); };
    CHECK(std::abs(integrate_double_scalar(product, 0.0, 1.0, {}, 0.0) - 0.125) <= 1e-14);

    const double w = 2.5;
    const auto diff = [w](double s, double sp) { return Complex(std::cos(w * s) - std::cos(w * sp)); };
    const auto diff_real = [w](double s, double sp) { return std::cos(w * s) - std::cos(w * sp); };
    for (double t : {0.3, 1.1, 2.0 * pi / w, 4.0}) {
        // closed form first checked against the brute-force oracle
        CHECK(brute_force_triangle(diff_real, t, 2000) == doctest::Approx(cos_difference_triangle(w, t)).epsilon(1e-5));
        CHECK(std::abs(integrate_double_scalar(diff, 0.0, t, {}, w) - cos_difference_triangle(w, t)) <= 1e-12);
    }
}

TEST_CASE("triangle plus swapped triangle equals the square") {
    const auto g = [](double s, double sp) { return Complex(std::sin(1.3 * s) * sp, std::cos(s - 2.0 * sp)); };
    const auto swapped = [&](double s, double sp) { return g(sp, s); };
    const double t1 = 0.2;
    const double t2 = 2.1;
    const Complex tri = integrate_double_scalar(g, t1, t2, {}, 2.0);
    const Complex tri_swapped = integrate_double_scalar(swapped, t1, t2, {}, 2.0);
    const auto row = [&](double s) -> CMatrix {
        const auto col = [&](double sp) -> CMatrix {
            CMatrix m(1, 1);
            m(0, 0) = g(s, sp);
            return m;
        };
        return integrate_matrix(col, t1, t2, {}, 2.0);
    };
    const Complex square = integrate_matrix(row, t1, t2, {}, 2.0)(0, 0);
    CHECK(std::abs(tri + tri_swapped - square) <= 1e-10);
}

TEST_CASE("integrate_nested matches the generic triangle rule") {
    const auto inner = [](double s) -> CMatrix { return std::cos(2.0 * s) * pauli::x() + s * pauli::z(); };
    const auto outer = [](double s, const CMatrix& k) -> CMatrix { return (std::sin(s) * pauli::y()) * k; };
    const CMatrix nested = integrate_nested(inner, outer, 0.0, 3.0, {}, 2.0).value;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const auto g = [&](double s, double sp) { return ((std::sin(s) * pauli::y()) * inner(sp))(i, j); };
            CHECK(std::abs(nested(i, j) - integrate_double_scalar(g, 0.0, 3.0, {}, 2.0)) <= 1e-12);
        }
    }
}

TEST_CASE("cross_term") {
    std::mt19937_64 rng(31);
    SUBCASE("time-independent Hamiltonian") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index n = 2 + trial % 3;
            const auto parts = hermitian_split(znh::testing::random_matrix(rng, n));
            const auto hp = [&](double) -> CMatrix { return parts.hermitian; };
            const auto hm = [&](double) -> CMatrix { return parts.anti_hermitian; };
            const StateVector psi = znh::testing::random_state(rng, n);
            CHECK(std::abs(cross_term(hp, hm, psi, 0.0, 1.3, {}, 0.0)) <= 1e-12);
        }
    }
    SUBCASE("parts commuting at all times") {
        const auto hp = [](double s) -> CMatrix { return std::cos(3.0 * s) * pauli::x(); };
        const auto hm = [](double s) -> CMatrix { return Complex(0.0, std::sin(1.0 + s)) * pauli::x(); };
        CHECK(std::abs(cross_term(hp, hm, ket::plus_y(), 0.0, 2.0, {}, 3.0)) <= 1e-14);
    }
    SUBCASE("oscillating decay, sigma_y eigenstates") {
        const double w0 = 1.0, gamma = 0.3, w = 4.0;
        const auto hp = [&](double) -> CMatrix { return 0.5 * w0 * pauli::z(); };
        const auto hm = [&](double s) -> CMatrix { return Complex(0.0, -0.5 * gamma * std::cos(w * s)) * pauli::x(); };
        for (double t : {0.25, 1.0, 2.7}) {
            // [H+(s), H-(s')] - [H+(s'), H-(s)] = (w0 gamma / 2)(cos ws' - cos ws) sy
            const double expected = -0.5 * w0 * gamma * cos_difference_triangle(w, t);
            CHECK(std::abs(cross_term(hp, hm, ket::plus_y(), 0.0, t, {}, w) - expected) <= 1e-13);
            CHECK(std::abs(cross_term(hp, hm, ket::minus_y(), 0.0, t, {}, w) + expected) <= 1e-13);
        }
    }
}

TEST_CASE("adaptive scalar integration") {
    CHECK(integrate_adaptive([](double x) { return std::sin(x); }, 0.0, pi) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(integrate_adaptive([](double x) { return std::exp(-x * x); }, -6.0, 6.0) ==
          doctest::Approx(std::sqrt(pi)).epsilon(1e-12));
}

TEST_CASE("split_integrals_series agrees with the one-interval rules") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 6; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const auto f = znh::testing::random_fourier(rng, n, 2, 0.6);
        const auto h = [&](double s) -> CMatrix { return f(s); };
        const auto hp = [&](double s) -> CMatrix { return hermitian_split(f(s)).hermitian; };
        const auto hm = [&](double s) -> CMatrix { return hermitian_split(f(s)).anti_hermitian; };
        const StateVector psi = znh::testing::random_state(rng, n);
        const double t1 = 0.1 * trial;
        const std::vector<double> times{t1, t1 + 0.4, t1 + 0.4, t1 + 1.3, t1 + 2.0};
        const std::optional<double> wmax =
            trial % 2 ? std::optional<double>(f.max_frequency()) : std::optional<double>();
        const auto series = split_integrals_series(h, psi, t1, times, {}, wmax);
        REQUIRE(series.size() == times.size());
        for (std::size_t j = 0; j < times.size(); ++j) {
            CHECK(series[j].t == times[j]);
            CHECK(max_abs(series[j].i_plus - integrate_matrix(hp, t1, times[j], {}, f.max_frequency())) <= 1e-11);
            CHECK(max_abs(series[j].i_minus - integrate_matrix(hm, t1, times[j], {}, f.max_frequency())) <= 1e-11);
            CHECK(std::abs(series[j].cross - cross_term(hp, hm, psi, t1, times[j], {}, f.max_frequency())) <= 1e-11);
        }
    }
    const auto h = [](double) -> CMatrix { return pauli::x(); };
    CHECK(split_integrals_series(h, ket::plus(), 0.0, {}).empty());
    CHECK_THROWS_AS(split_integrals_series(h, ket::plus(), 0.0, {1.0, 0.5}), DomainError);
}
