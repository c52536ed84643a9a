#pragma once

// Second-order (Dyson) survival probability for time-dependent non-Hermitian
// Hamiltonians, with its reductions and an independent amplitude-product route.

#include <vector>

#include "znh/models.hpp"
#include "znh/quadrature.hpp"

namespace znh {

/// Departure from unity beyond which the second-order result is flagged.
inline constexpr double kValidityThreshold = 0.5;
/// Imaginary residue of an assembled probability that aborts the computation.
inline constexpr double kMaxImaginaryResidue = 1e-8;

/// Term-by-term decomposition of the second-order survival probability:
///
///   total = 1 + first_order - delta_plus_term - delta_minus_term - cross
///
/// with I+- the time integrals of the Hermitian / anti-Hermitian parts of H,
/// first_order = -2i <I->, delta_plus_term = D+(I-), delta_minus_term = D-(I+),
/// and cross the triangle integral of <[H+(s),H-(s')] - [H+(s'),H-(s)]>.
struct SurvivalBreakdown {
    double t1 = 0.0;
    double t2 = 0.0;
    Complex first_order{};
    Complex delta_plus_term{};
    double delta_minus_term = 0.0;
    Complex cross{};
    double total = 1.0;
    double imag_residue = 0.0;
    bool validity_warning = false;
};

SurvivalBreakdown survival_second_order(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                        const QuadratureConfig& cfg = {});

/// survival_second_order at every time in `times` (non-decreasing, >= t1),
/// sharing one quadrature pass.
std::vector<SurvivalBreakdown> survival_second_order_series(const HamiltonianModel& model, const StateVector& psi,
                                                            double t1, const std::vector<double>& times,
                                                            const QuadratureConfig& cfg = {});

/// 1 - D-(I+, psi); DomainError unless the model is Hermitian on a sample grid.
double survival_hermitian_variance(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                   const QuadratureConfig& cfg = {});

struct OscillatingDecayParams {
    double omega0 = 1.0;
    double gamma = 0.0;
    double omega = 1.0;
};

/// Closed form of the second-order survival for the oscillating-decay model
/// (t1 = 0). Requires omega > 0.
double survival_oscillating_decay_closed_form(const OscillatingDecayParams& params, const StateVector& psi, double t);

/// <psi|T2|psi> <psi|T2^dagger|psi> truncated to second order, where T2 is the
/// Dyson series through the nested double integral of H(s)H(s').
double survival_via_dyson_amplitude(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                                    const QuadratureConfig& cfg = {});

/// First Magnus term: -i times the integral of H over [t1, t2].
CMatrix magnus_first_order(const HamiltonianModel& model, double t1, double t2, const QuadratureConfig& cfg = {});

struct RepeatedSurvival {
    double probability = 1.0;
    std::vector<double> factors;
    /// Some factor left [0, 1.1] or its interval was already flagged.
    bool validity_warning = false;
};

/// Product of interval survivals with projection onto psi at each instant.
RepeatedSurvival repeated_measurement_survival(const HamiltonianModel& model, const StateVector& psi,
                                               const std::vector<double>& instants, const QuadratureConfig& cfg = {});

}  // namespace znh
