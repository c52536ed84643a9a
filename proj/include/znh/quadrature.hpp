#pragma once

// Composite Gauss-Legendre quadrature for operator-valued integrands over an
// interval and over the ordered triangle t1 <= s' <= s <= t2.

#include <functional>
#include <optional>
#include <vector>

#include "znh/operator_core.hpp"

namespace znh {

struct QuadratureConfig {
    int panels_per_period = 32;
    int nodes_per_panel = 8;  // Gauss-Legendre order
    double abs_tol = 1e-12;
    int max_refinements = 12;

    void validate() const;
};

/// Panel count used when the integrand frequency is not known.
inline constexpr int kUnknownFrequencyPanels = 256;

struct GaussLegendreRule {
    std::vector<double> nodes;    // on [-1, 1], ascending
    std::vector<double> weights;
};

/// Cached rule of the given order (2..64).
const GaussLegendreRule& gauss_legendre(int order);

/// Thrown when panel doubling does not settle within max_refinements. Carries
/// the last (finest) estimate and the difference to the previous one.
class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& what, CMatrix last_estimate, double achieved_error)
        : NumericalError(what), last_estimate_(std::move(last_estimate)), achieved_error_(achieved_error) {}

    const CMatrix& last_estimate() const { return last_estimate_; }
    double achieved_error() const { return achieved_error_; }

private:
    CMatrix last_estimate_;
    double achieved_error_;
};

struct MatrixIntegral {
    CMatrix value;
    double error = 0.0;  // max entrywise change over the last doubling
    int panels = 0;      // panel count of the returned estimate
};

using MatrixFunction = std::function<CMatrix(double)>;
using ScalarFunction2 = std::function<Complex(double, double)>;
/// outer(s, K(s)) with K(s) = integral of the inner integrand from t1 to s.
using NestedOuter = std::function<CMatrix(double, const CMatrix&)>;

/// Starting panel count for [t1, t2] given the highest integrand frequency
/// (rad/time). nullopt means unknown.
int initial_panels(double t1, double t2, std::optional<double> max_frequency, const QuadratureConfig& cfg);

/// Single pass of the composite rule with a fixed panel count, no refinement.
CMatrix composite_matrix(const MatrixFunction& f, double t1, double t2, int panels, int order);

MatrixIntegral integrate_matrix_estimate(const MatrixFunction& f, double t1, double t2,
                                         const QuadratureConfig& cfg = {},
                                         std::optional<double> max_frequency = std::nullopt);

CMatrix integrate_matrix(const MatrixFunction& f, double t1, double t2, const QuadratureConfig& cfg = {},
                         std::optional<double> max_frequency = std::nullopt);

/// Integral over s in [t1, t2] of g(s, s') with s' in [t1, s]. Inner and outer
/// rules share the panel boundaries; the panel containing s is truncated at s.
Complex integrate_double_scalar(const ScalarFunction2& g, double t1, double t2, const QuadratureConfig& cfg = {},
                                std::optional<double> max_frequency = std::nullopt);

/// Integral over s in [t1, t2] of outer(s, K(s)), K(s) = integral of inner
/// over [t1, s]. The triangle is still traversed with upper limit s, but the
/// full-panel part of K is accumulated once instead of per outer node.
MatrixIntegral integrate_nested(const MatrixFunction& inner, const NestedOuter& outer, double t1, double t2,
                                const QuadratureConfig& cfg = {},
                                std::optional<double> max_frequency = std::nullopt);

/// Integral over the ordered triangle of
/// <psi| [H+(s), H-(s')] - [H+(s'), H-(s)] |psi>.
Complex cross_term(const MatrixFunction& hplus, const MatrixFunction& hminus, const StateVector& psi, double t1,
                   double t2, const QuadratureConfig& cfg = {},
                   std::optional<double> max_frequency = std::nullopt);

struct SplitIntegrals {
    double t = 0.0;
    CMatrix i_plus;   // integral of the Hermitian part over [t1, t]
    CMatrix i_minus;  // integral of the anti-Hermitian part
    Complex cross{};  // cross_term over [t1, t]
};

/// The integrals survival_second_order needs, at every time in `times`
/// (non-decreasing, >= t1) in a single pass. Panel boundaries include every
/// requested time. The partial-panel inner integral uses the interpolating
/// polynomial through the panel's Gauss nodes, so h is evaluated once per
/// node. Refinement doubles every panel and checks all outputs together.
std::vector<SplitIntegrals> split_integrals_series(const MatrixFunction& h, const StateVector& psi, double t1,
                                                   const std::vector<double>& times, const QuadratureConfig& cfg = {},
                                                   std::optional<double> max_frequency = std::nullopt);

/// Adaptive scalar integral (bisection of Gauss-Legendre panels) to abs_tol.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double abs_tol = 1e-12,
                          int max_depth = 40);

}  // namespace znh
