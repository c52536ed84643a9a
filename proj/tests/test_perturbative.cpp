#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_support.hpp"
#include "znh/perturbative.hpp"

using namespace znh;
using std::numbers::pi;

namespace {

HamiltonianModel constant_model(const CMatrix& h) {
    return HamiltonianModel("constant", h.rows(), [h](double) { return h; }, 0.0);
}

HamiltonianModel zero_model(Eigen::Index n) { return constant_model(CMatrix::Zero(n, n)); }

const std::vector<StateVector>& two_level_states() {
    static const std::vector<StateVector> states = {
        ket::plus(), ket::minus(), ket::plus_x(), ket::minus_x(), ket::plus_y(), ket::minus_y(),
        normalized((StateVector(2) << Complex(0.3, 0.1), Complex(-0.7, 0.4)).finished()),
        normalized((StateVector(2) << Complex(0.9, -0.2), Complex(0.1, 0.25)).finished()),
    };
    return states;
}

// Triangle integral of cos(ws) - cos(ws') over [0, t] (antiderivatives).
double triangle_bracket(double w, double t) {
    return 2.0 * (std::cos(w * t) - 1.0) / (w * w) + t * std::sin(w * t) / w;
}

}  // namespace

TEST_CASE("second-order survival: trivial and Hermitian cases") {
    SUBCASE("zero Hamiltonian") {
        std::mt19937_64 rng(1);
        const auto b = survival_second_order(zero_model(3), znh::testing::random_state(rng, 3), 0.0, 2.0);
        CHECK(b.total == 1.0);
        CHECK(std::abs(b.first_order) == 0.0);
        CHECK(std::abs(b.delta_plus_term) == 0.0);
        CHECK(b.delta_minus_term == 0.0);
        CHECK(std::abs(b.cross) == 0.0);
    }
    SUBCASE("oscillating Hermitian model revives at full periods") {
        for (int k : {1, 2, 7, 30}) {
            const auto model = hermitian_xy(1.0, 0.5, k * 1.0);
            for (const auto& psi : two_level_states()) {
                const auto b = survival_second_order(model, psi, 0.0, 2 * pi / k);
                CHECK(std::abs(b.total - 1.0) <= 1e-12);
                CHECK(std::abs(b.first_order) <= 1e-12);
                CHECK(std::abs(b.delta_plus_term) <= 1e-12);
                CHECK(std::abs(b.cross) <= 1e-12);
            }
        }
    }
    SUBCASE("time-independent Hermitian reduces to the variance law") {
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::Index n = 2 + trial % 3;
            const CMatrix h = znh::testing::random_hermitian(rng, n);
            const StateVector psi = znh::testing::random_state(rng, n);
            const double t = 0.05 + 0.1 * trial;
            const double expected = 1.0 - delta_minus(h, psi).real() * t * t;
            CHECK(std::abs(survival_second_order(constant_model(h), psi, 0.0, t).total - expected) <= 1e-12);
        }
    }
    SUBCASE("bad inputs") {
        const auto model = hermitian_xy(1.0, 0.5, 1.0);
        CHECK_THROWS_AS(survival_second_order(model, 2.0 * ket::plus(), 0.0, 1.0), DomainError);
        CHECK_THROWS_AS(survival_second_order(model, ket::plus(), 1.0, 0.0), DomainError);
        CHECK_THROWS_AS(survival_second_order(model, StateVector::Unit(3, 0), 0.0, 1.0), DimensionError);
    }
}

TEST_CASE("validity flag") {
    const auto model = constant_model(pauli::x());
    CHECK_FALSE(survival_second_order(model, ket::plus(), 0.0, 0.5).validity_warning);
    CHECK(survival_second_order(model, ket::plus(), 0.0, 1.0).validity_warning);  // 1 - t^2 = 0
}

TEST_CASE("Hermitian variance form") {
    const double w0 = 1.7;
    const auto static_z = constant_model(0.5 * w0 * pauli::z());
    CHECK(survival_hermitian_variance(hermitian_xy(1.0, 0.5, 3.0), ket::plus(), 0.0, 2 * pi / 3.0) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(survival_hermitian_variance(static_z, ket::plus(), 0.0, 2.3) == doctest::Approx(1.0).epsilon(1e-15));
    for (double t : {0.1, 0.5, 1.2}) {
        // diag(a, -a) with a = w0 t / 2 in an equal superposition: <A^2> = a^2, <A> = 0
        const double a = 0.5 * w0 * t;
        CHECK(survival_hermitian_variance(static_z, ket::plus_x(), 0.0, t) == doctest::Approx(1.0 - a * a).epsilon(1e-14));
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto model = hermitian_xy(0.5 + u(rng), u(rng), 1.0 + 5.0 * u(rng));
        const StateVector psi = znh::testing::random_state(rng, 2);
        const double t = 3.0 * u(rng);
        CHECK(std::abs(survival_hermitian_variance(model, psi, 0.0, t) - survival_second_order(model, psi, 0.0, t).total) <=
              1e-12);
    }
    CHECK_THROWS_AS(survival_hermitian_variance(oscillating_decay(1.0, 0.1, 2.0), ket::plus(), 0.0, 1.0), DomainError);
}

TEST_CASE("oscillating-decay closed form") {
    const double w0 = 1.0;
    SUBCASE("full periods keep only the Hermitian variance") {
        const OscillatingDecayParams p{w0, 0.3, 5.0};
        for (const auto& psi : two_level_states()) {
            const double t = 2 * pi / p.omega;
            const double expected = 1.0 - delta_minus((0.5 * w0 * t) * pauli::z(), psi).real();
            CHECK(survival_oscillating_decay_closed_form(p, psi, t) == doctest::Approx(expected).epsilon(1e-14));
        }
    }
    SUBCASE("sigma_y eigenstates have no first-order term") {
        const OscillatingDecayParams p{w0, 0.4, 3.0};
        for (double t : {0.1, 0.9, 2.4}) {
            const double s = std::sin(p.omega * t);
            const double base = 1.0 + p.gamma * p.gamma * s * s / (4 * p.omega * p.omega) - w0 * w0 * t * t / 4;
            const double branch = 0.5 * p.gamma * w0 * triangle_bracket(p.omega, t);
            CHECK(survival_oscillating_decay_closed_form(p, ket::plus_y(), t) == doctest::Approx(base + branch).epsilon(1e-14));
            CHECK(survival_oscillating_decay_closed_form(p, ket::minus_y(), t) ==
                  doctest::Approx(base - branch).epsilon(1e-14));
            // the gamma-linear part is purely the cross branch: it flips sign between the two states
            const double plus = survival_oscillating_decay_closed_form(p, ket::plus_y(), t);
            const double minus = survival_oscillating_decay_closed_form(p, ket::minus_y(), t);
            CHECK(0.5 * (plus + minus) == doctest::Approx(base).epsilon(1e-14));
        }
    }
    SUBCASE("gamma = 0 is the Hermitian reduction") {
        const OscillatingDecayParams p{w0, 0.0, 2.0};
        for (const auto& psi : two_level_states()) {
            const double t = 0.8;
            CHECK(survival_oscillating_decay_closed_form(p, psi, t) ==
                  doctest::Approx(1.0 - delta_minus((0.5 * w0 * t) * pauli::z(), psi).real()).epsilon(1e-15));
        }
    }
    SUBCASE("agrees with the generic formula") {
        for (double gamma : {0.05, 0.2, 0.5}) {
            for (double w : {1.0, 4.0, 32.0}) {
                const auto model = oscillating_decay(w0, gamma, w);
                for (const auto& psi : two_level_states()) {
                    for (double frac : {0.0, 0.13, 0.5, 1.0, 1.77, 2.0}) {
                        const double t = frac * 2 * pi / w;
                        CHECK(std::abs(survival_oscillating_decay_closed_form({w0, gamma, w}, psi, t) -
                                       survival_second_order(model, psi, 0.0, t).total) <= 1e-8);
                    }
                }
            }
        }
    }
    CHECK_THROWS_AS(survival_oscillating_decay_closed_form({1.0, 0.1, 0.0}, ket::plus(), 1.0), DomainError);
    CHECK_THROWS_AS(survival_oscillating_decay_closed_form({1.0, 0.1, 1.0}, ket::plus(), -1.0), DomainError);
}

TEST_CASE("Dyson amplitude oracle") {
    std::mt19937_64 rng(7);
    SUBCASE("time-independent Hermitian") {
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::Index n = 2 + trial % 3;
            const CMatrix h = znh::testing::random_hermitian(rng, n);
            const StateVector psi = znh::testing::random_state(rng, n);
            const double t = 0.1 + 0.07 * trial;
            CHECK(std::abs(survival_via_dyson_amplitude(constant_model(h), psi, 0.0, t) -
                           (1.0 - delta_minus(h, psi).real() * t * t)) <= 1e-10);
        }
    }
    SUBCASE("oscillating decay, random states") {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const auto model = oscillating_decay(1.0, 0.3, 4.0);
        for (int trial = 0; trial < 10; ++trial) {
            const StateVector psi = znh::testing::random_state(rng, 2);
            const double t = u(rng) * 2 * pi / 4.0;
            CHECK(std::abs(survival_via_dyson_amplitude(model, psi, 0.0, t) -
                           survival_second_order(model, psi, 0.0, t).total) <= 1e-9);
        }
    }
    SUBCASE("gain-loss") {
        const auto model = gain_loss(DriveProfile::constant(3.0), 0.25, -0.1);
        for (double t : {0.2, 1.0, 2.5})
            CHECK(std::abs(survival_via_dyson_amplitude(model, ket::plus(), 0.0, t) -
                           survival_second_order(model, ket::plus(), 0.0, t).total) <= 1e-9);
    }
}

TEST_CASE("commuting Hermitian and anti-Hermitian parts drop the cross term") {
    // H+(t) = cos(2t) sx + 0.4 1, H-(t) = -i (0.3 + sin t) sx: all parts commute
    const auto h = [](double t) -> CMatrix {
        return std::cos(2.0 * t) * pauli::x() + 0.4 * pauli::identity() + Complex(0.0, -(0.3 + std::sin(t))) * pauli::x();
    };
    const HamiltonianModel model("commuting", 2, h, 2.0);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 10; ++trial) {
        const StateVector psi = znh::testing::random_state(rng, 2);
        const double t = 0.3 + 0.2 * trial;
        const auto b = survival_second_order(model, psi, 0.0, t);
        CHECK(std::abs(b.cross) <= 1e-10);
        const Complex four_terms = 1.0 + b.first_order - b.delta_plus_term - b.delta_minus_term;
        CHECK(std::abs(four_terms.real() - b.total) <= 1e-10);
    }
}

TEST_CASE("Magnus first-order term") {
    const auto xy = hermitian_xy(1.0, 0.3, 4.0);
    CHECK(max_abs(magnus_first_order(xy, 0.0, 2 * pi / 4.0)) <= 1e-14);
    std::mt19937_64 rng(11);
    const CMatrix h = znh::testing::random_matrix(rng, 3);
    CHECK(max_abs(magnus_first_order(constant_model(h), 0.0, 1.7) - (-kI * 1.7) * h) <= 1e-13);
    const double w0 = 1.3, w = 5.0;
    const CMatrix expected = -kI * (0.5 * w0 * 2 * pi / w) * pauli::z();
    CHECK(max_abs(magnus_first_order(oscillating_decay(w0, 0.4, w), 0.0, 2 * pi / w) - expected) <= 1e-14);
}

TEST_CASE("repeated measurements") {
    const double w = 3.0;
    std::vector<double> instants;
    for (int k = 0; k <= 5; ++k) instants.push_back(k * 2 * pi / w);
    const auto r = repeated_measurement_survival(hermitian_xy(1.0, 0.5, w), ket::plus(), instants);
    CHECK(r.probability == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.factors.size() == 5);
    CHECK_FALSE(r.validity_warning);

    CHECK(repeated_measurement_survival(zero_model(2), ket::plus(), {0.0, 0.3, 1.0}).probability == 1.0);

    const CMatrix h = 0.7 * pauli::x() + 0.2 * pauli::z();
    const StateVector psi = ket::plus();
    const double delta = 0.15;
    const int n = 6;
    std::vector<double> even;
    for (int i = 0; i <= n; ++i) even.push_back(i * delta);
    const double factor = 1.0 - delta_minus(h, psi).real() * delta * delta;
    CHECK(repeated_measurement_survival(constant_model(h), psi, even).probability ==
          doctest::Approx(std::pow(factor, n)).epsilon(1e-12));

    CHECK_THROWS_AS(repeated_measurement_survival(zero_model(2), psi, {0.0, 1.0, 1.0}), DomainError);
    // gain beyond 1.1 raises the flag
    const auto gain = constant_model(Complex(0.0, 0.5) * pauli::identity());
    CHECK(repeated_measurement_survival(gain, psi, {0.0, 0.5}).validity_warning);
}
