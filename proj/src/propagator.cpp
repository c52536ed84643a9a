#include "znh/propagator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace znh {

namespace {

constexpr long kMaxSteps = 50'000'000;

// Dormand-Prince 5(4) tableau.
namespace dp {
constexpr std::array<double, 7> c = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// fifth-order minus embedded fourth-order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp

class Rhs {
public:
    explicit Rhs(const HamiltonianModel& model) : model_(model) {}
    CMatrix operator()(double t, const CMatrix& y) const { return -kI * (model_(t) * y); }

private:
    const HamiltonianModel& model_;
};

void check_state(const CMatrix& y, double t) {
    if (!y.allFinite()) throw DivergenceError("propagate: non-finite state at t = " + std::to_string(t));
}

CMatrix integrate_rk4(const Rhs& f, CMatrix y, double t1, double t2, long steps) {
    const double h = (t2 - t1) / static_cast<double>(steps);
    for (long i = 0; i < steps; ++i) {
        const double t = t1 + h * static_cast<double>(i);
        const CMatrix k1 = f(t, y);
        const CMatrix k2 = f(t + 0.5 * h, y + (0.5 * h) * k1);
        const CMatrix k3 = f(t + 0.5 * h, y + (0.5 * h) * k2);
        const CMatrix k4 = f(t + h, y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        check_state(y, t + h);
    }
    return y;
}

double error_norm(const CMatrix& err, const CMatrix& y0, const CMatrix& y1, double rel_tol, double abs_tol) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < err.cols(); ++j) {
        for (Eigen::Index i = 0; i < err.rows(); ++i) {
            const double scale = abs_tol + rel_tol * std::max(std::abs(y0(i, j)), std::abs(y1(i, j)));
            const double r = std::abs(err(i, j)) / scale;
            sum += r * r;
        }
    }
    return std::sqrt(sum / static_cast<double>(err.size()));
}

CMatrix integrate_dopri5(const Rhs& f, CMatrix y, double t1, double t2, double max_step, double rel_tol,
                         double abs_tol) {
    using namespace dp;
    double t = t1;
    double h = std::min(max_step, t2 - t1);
    CMatrix k1 = f(t, y);
    long steps = 0;
    while (t < t2) {
        if (++steps > kMaxSteps) throw StiffnessError("propagate: step budget exhausted");
        const bool last = t + h >= t2;
        if (last) h = t2 - t;
        const CMatrix k2 = f(t + c[1] * h, y + h * (a21 * k1));
        const CMatrix k3 = f(t + c[2] * h, y + h * (a31 * k1 + a32 * k2));
        const CMatrix k4 = f(t + c[3] * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        const CMatrix k5 = f(t + c[4] * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        const CMatrix k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        CMatrix y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        const double t_new = last ? t2 : t + h;
        CMatrix k7 = f(t_new, y_new);
        const CMatrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        if (!y_new.allFinite() || !k7.allFinite())
            throw DivergenceError("propagate: non-finite stage at t = " + std::to_string(t));
        // with absurdly small tolerances the ratio can overflow; that is a rejection, not a divergence
        const double norm = error_norm(err, y, y_new, rel_tol, abs_tol);

        const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
        if (norm <= 1.0) {
            t = t_new;
            y = std::move(y_new);
            k1 = std::move(k7);  // first-same-as-last
            check_state(y, t);
        }
        h = std::min(h * factor, max_step);
        if (t < t2 && h < 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)))
            throw StiffnessError("propagate: step size underflow at t = " + std::to_string(t));
    }
    return y;
}

CMatrix evolve(const HamiltonianModel& model, CMatrix y, double t1, double t2, const PropagationConfig& cfg) {
    cfg.validate();
    if (!std::isfinite(t1) || !std::isfinite(t2) || t2 < t1) throw DomainError("propagate: need finite t1 <= t2");
    if (y.rows() != model.dim()) throw DimensionError("propagate: state and model dims differ");
    if (t1 == t2) return y;

    const double span = t2 - t1;
    const double omega = characteristic_frequency(model, t1, t2);
    const double period = omega > 0.0 ? 2.0 * std::numbers::pi / omega : std::numeric_limits<double>::infinity();
    const Rhs f(model);

    if (cfg.method == PropagationMethod::rk4) {
        double steps = std::isfinite(period) ? std::ceil(cfg.steps_per_period * span / period) : 1.0;
        if (cfg.max_step) steps = std::max(steps, std::ceil(span / *cfg.max_step));
        steps = std::max(steps, 1.0);
        if (steps > kMaxSteps) throw StiffnessError("propagate: fixed-step count exceeds budget");
        return integrate_rk4(f, std::move(y), t1, t2, static_cast<long>(steps));
    }
    double max_step = cfg.max_step.value_or(std::min(span, period / 20.0));
    return integrate_dopri5(f, std::move(y), t1, t2, max_step, cfg.rel_tol, cfg.abs_tol);
}

}  // namespace

void PropagationConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("propagation: tolerances must be > 0");
    if (steps_per_period < 16) throw ConfigError("propagation: steps_per_period must be >= 16");
    if (max_step && !(*max_step > 0.0)) throw ConfigError("propagation: max_step must be > 0");
}

double characteristic_frequency(const HamiltonianModel& model, double t1, double t2) {
    double omega = model.max_frequency().value_or(0.0);
    constexpr int samples = 8;
    for (int i = 0; i <= samples; ++i) {
        const CMatrix h = model(t1 + (t2 - t1) * i / samples);
        omega = std::max(omega, h.cwiseAbs().rowwise().sum().maxCoeff());
    }
    return omega;
}

StateVector propagate(const HamiltonianModel& model, const StateVector& psi0, double t1, double t2,
                      const PropagationConfig& cfg) {
    require_normalized(psi0, "propagate");
    return evolve(model, psi0, t1, t2, cfg);
}

StateVector advance(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                    const PropagationConfig& cfg) {
    require_finite(psi, "advance");
    return evolve(model, psi, t1, t2, cfg);
}

double survival_exact(const HamiltonianModel& model, const StateVector& psi0, double t1, double t2,
                      const PropagationConfig& cfg) {
    const StateVector psi = propagate(model, psi0, t1, t2, cfg);
    return std::norm(psi0.dot(psi));
}

CMatrix propagator_matrix(const HamiltonianModel& model, double t1, double t2, const PropagationConfig& cfg) {
    const Eigen::Index n = model.dim();
    return evolve(model, CMatrix::Identity(n, n), t1, t2, cfg);
}

}  // namespace znh
