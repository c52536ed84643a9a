#include "znh/perturbative.hpp"

#include <cmath>
#include <string>

namespace znh {

namespace {

void check_times(double t1, double t2, const char* what) {
    if (!std::isfinite(t1) || !std::isfinite(t2) || t2 < t1)
        throw DomainError(std::string(what) + ": need finite t1 <= t2");
}

void check_residue(double residue, const char* what) {
    if (std::abs(residue) > kMaxImaginaryResidue)
        throw NumericalError(std::string(what) + ": assembled probability has imaginary residue " +
                             std::to_string(residue));
}

}  // namespace

std::vector<SurvivalBreakdown> survival_second_order_series(const HamiltonianModel& model, const StateVector& psi,
                                                            double t1, const std::vector<double>& times,
                                                            const QuadratureConfig& cfg) {
    for (double t : times) check_times(t1, t, "survival_second_order");
    require_normalized(psi, "survival_second_order");
    if (psi.size() != model.dim()) throw DimensionError("survival_second_order: state and model dims differ");

    const auto h = [&](double s) -> CMatrix { return model(s); };
    const auto parts = split_integrals_series(h, psi, t1, times, cfg, model.max_frequency());

    std::vector<SurvivalBreakdown> out;
    out.reserve(parts.size());
    for (const auto& p : parts) {
        SurvivalBreakdown b;
        b.t1 = t1;
        b.t2 = p.t;
        b.first_order = -2.0 * kI * expectation(p.i_minus, psi);
        b.delta_plus_term = delta_plus(p.i_minus, psi);
        const Complex dminus = delta_minus(p.i_plus, psi);
        b.delta_minus_term = dminus.real();
        b.cross = p.cross;
        const Complex total = 1.0 + b.first_order - b.delta_plus_term - dminus - b.cross;
        b.imag_residue = total.imag();
        check_residue(b.imag_residue, "survival_second_order");
        b.total = total.real();
        b.validity_warning = std::abs(1.0 - b.total) > kValidityThreshold;
        out.push_back(b);
    }
    return out;
}

SurvivalBreakdown survival_second_order(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                        const QuadratureConfig& cfg) {
    return survival_second_order_series(model, psi, t1, {t2}, cfg).front();
}

double survival_hermitian_variance(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                   const QuadratureConfig& cfg) {
    check_times(t1, t2, "survival_hermitian_variance");
    require_normalized(psi, "survival_hermitian_variance");
    if (psi.size() != model.dim()) throw DimensionError("survival_hermitian_variance: state and model dims differ");

    constexpr int samples = 64;
    for (int i = 0; i <= samples; ++i) {
        const CMatrix h = model(t1 + (t2 - t1) * i / samples);
        const auto parts = hermitian_split(h);
        if (max_abs(parts.anti_hermitian) > 1e-12 * std::max(1.0, max_abs(h)))
            throw DomainError("survival_hermitian_variance: model " + model.name() + " is not Hermitian");
    }
    const auto hplus = [&](double s) -> CMatrix { return hermitian_split(model(s)).hermitian; };
    const CMatrix i_plus = integrate_matrix(hplus, t1, t2, cfg, model.max_frequency());
    return 1.0 - delta_minus(i_plus, psi).real();
}

double survival_oscillating_decay_closed_form(const OscillatingDecayParams& p, const StateVector& psi, double t) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("closed form: t must be finite and >= 0");
    if (!(p.omega > 0.0)) throw DomainError("closed form: omega must be > 0");
    if (p.gamma < 0.0) throw DomainError("closed form: gamma must be >= 0");
    require_normalized(psi, "closed form");
    if (psi.size() != 2) throw DimensionError("closed form: two-level state required");

    const double w = p.omega;
    const double s = std::sin(w * t);
    const double c = std::cos(w * t);
    const CMatrix sx = pauli::x();

    // integral of H- over [0, t] is -i (gamma / 2 w) sin(wt) sx
    const CMatrix i_minus = Complex(0.0, -p.gamma * s / (2.0 * w)) * sx;
    const CMatrix i_plus = (0.5 * p.omega0 * t) * pauli::z();
    // triangle integral of cos(ws) - cos(ws')
    const double bracket = 2.0 * (c - 1.0) / (w * w) + t * s / w;

    const double first_order = -(p.gamma / w) * s * expectation(sx, psi).real();
    const double cross_contribution = 0.5 * p.gamma * p.omega0 * expectation(pauli::y(), psi).real() * bracket;
    return 1.0 + first_order - delta_plus(i_minus, psi).real() - delta_minus(i_plus, psi).real() + cross_contribution;
}

double survival_via_dyson_amplitude(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                    const QuadratureConfig& cfg) {
    check_times(t1, t2, "survival_via_dyson_amplitude");
    require_normalized(psi, "survival_via_dyson_amplitude");
    if (psi.size() != model.dim()) throw DimensionError("survival_via_dyson_amplitude: state and model dims differ");

    const auto h = [&](double s) -> CMatrix { return model(s); };
    const CMatrix first = integrate_matrix(h, t1, t2, cfg, model.max_frequency());
    // triangle integral of H(s) H(s'), s' < s
    const auto outer = [&](double s, const CMatrix& k) -> CMatrix { return model(s) * k; };
    const CMatrix second = integrate_nested(h, outer, t1, t2, cfg, model.max_frequency()).value;

    // T2 = 1 - i F - S,  T2^dagger = 1 + i F^dagger - S^dagger
    const Complex a1 = -kI * expectation(first, psi);
    const Complex a2 = -expectation(second, psi);
    const Complex b1 = kI * expectation(first.adjoint(), psi);
    const Complex b2 = -expectation(second.adjoint(), psi);

    // keep orders 0..2 of (1 + a1 + a2)(1 + b1 + b2)
    const Complex product = 1.0 + (a1 + b1) + (a2 + b2 + a1 * b1);
    check_residue(product.imag(), "survival_via_dyson_amplitude");
    return product.real();
}

CMatrix magnus_first_order(const HamiltonianModel& model, double t1, double t2, const QuadratureConfig& cfg) {
    check_times(t1, t2, "magnus_first_order");
    const auto h = [&](double s) -> CMatrix { return model(s); };
    return -kI * integrate_matrix(h, t1, t2, cfg, model.max_frequency());
}

RepeatedSurvival repeated_measurement_survival(const HamiltonianModel& model, const StateVector& psi,
                                               const std::vector<double>& instants, const QuadratureConfig& cfg) {
    for (std::size_t i = 1; i < instants.size(); ++i) {
        if (!(instants[i] > instants[i - 1]))
            throw DomainError("repeated_measurement_survival: instants must be strictly increasing");
    }
    RepeatedSurvival out;
    for (std::size_t i = 1; i < instants.size(); ++i) {
        const auto step = survival_second_order(model, psi, instants[i - 1], instants[i], cfg);
        out.factors.push_back(step.total);
        out.probability *= step.total;
        if (step.total < 0.0 || step.total > 1.1 || step.validity_warning) out.validity_warning = true;
    }
    return out;
}

}  // namespace znh
