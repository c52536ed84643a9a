#pragma once

// Time-dependent Hamiltonians: presets, Fourier-form models, and the rotating
// frame of a commuting drive term.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "znh/operator_core.hpp"
#include "znh/quadrature.hpp"

namespace znh {

using ParamMap = std::map<std::string, double>;

/// Scalar drive frequency omega(s) in rad/time.
class DriveProfile {
public:
    enum class Kind { constant, linear, custom };

    static DriveProfile constant(double omega);
    /// omega(s) = omega0 + rate * s
    static DriveProfile linear(double omega0, double rate);
    /// Arbitrary profile; phases fall back to adaptive quadrature.
    static DriveProfile custom(std::function<double(double)> omega);

    double operator()(double s) const;
    Kind kind() const { return kind_; }
    bool is_constant() const { return kind_ == Kind::constant; }

    /// Integral of omega over [t1, t].
    double phase(double t1, double t) const;

    /// Largest |omega(s)| on [a, b] (sampled for custom profiles).
    double max_abs_on(double a, double b) const;

private:
    Kind kind_ = Kind::constant;
    double omega0_ = 0.0;
    double rate_ = 0.0;
    std::function<double(double)> custom_;
};

/// A commuting drive term H0(t) = omega(t) * generator carried by a preset.
struct DriveTerm {
    DriveProfile drive;
    CMatrix generator;  // Hermitian, time-independent
};

/// H(t) as an exact analytic function of time, plus the metadata the
/// integrators need to size their grids.
class HamiltonianModel {
public:
    using Evaluator = std::function<CMatrix(double)>;

    HamiltonianModel(std::string name, Eigen::Index dim, Evaluator evaluator, std::optional<double> max_frequency,
                     ParamMap params = {}, std::optional<DriveTerm> drive_term = std::nullopt);

    CMatrix operator()(double t) const;

    const std::string& name() const { return name_; }
    Eigen::Index dim() const { return dim_; }
    const ParamMap& params() const { return params_; }
    /// Highest angular frequency of the explicit time dependence. nullopt when
    /// unknown (custom drive profiles).
    std::optional<double> max_frequency() const { return max_frequency_; }
    const std::optional<DriveTerm>& drive_term() const { return drive_term_; }

private:
    std::string name_;
    Eigen::Index dim_;
    Evaluator evaluator_;
    std::optional<double> max_frequency_;
    ParamMap params_;
    std::optional<DriveTerm> drive_term_;
};

CMatrix evaluate(const HamiltonianModel& model, double t);

struct FourierMode {
    double frequency = 0.0;
    CMatrix cos_coeff;
    CMatrix sin_coeff;
};

/// H(t) = static_term + sum_k [cos(w_k t) C_k + sin(w_k t) S_k].
struct FourierHamiltonian {
    CMatrix static_term;
    std::vector<FourierMode> modes;

    void validate() const;
    Eigen::Index dim() const { return static_term.rows(); }
    CMatrix operator()(double t) const;
    double max_frequency() const;
    /// Same model with every mode frequency multiplied by factor.
    FourierHamiltonian scaled_frequencies(double factor) const;
    HamiltonianModel to_model(std::string name = "fourier") const;
};

// Presets (two-level, sigma_z eigenbasis).

/// lambda*eta*sin(wt) sx + lambda*(1-eta)*cos(wt) sy
HamiltonianModel hermitian_xy(double lambda, double eta, double omega);
/// (w(t)/2) sx - i(gamma/2)(sz + 1) + kappa sy
HamiltonianModel decaying_qubit(const DriveProfile& drive, double gamma, double kappa);
/// (w(t)/2) sx - i(gamma/2) sz + kappa sy
HamiltonianModel gain_loss(const DriveProfile& drive, double gamma, double kappa);
/// (w0/2) sz - i(gamma/2) cos(wt) sx
HamiltonianModel oscillating_decay(double omega0, double gamma, double omega);

struct PresetInfo {
    std::string name;
    std::string formula;
    std::vector<std::string> params;
};

const std::vector<PresetInfo>& preset_catalog();

/// Builds a preset from named parameters. Unknown names or keys raise
/// ConfigError; a negative gamma raises DomainError. Drive presets accept an
/// optional "chirp" key: omega(s) = omega + chirp * s.
HamiltonianModel make_preset(const std::string& name, const ParamMap& params);

/// Rotating frame of a drive term H0(t) with [H0(s), H0(s')] = 0.
class InteractionFrame {
public:
    /// Frame of the model's own drive term; ConfigError if it has none.
    static InteractionFrame for_drive(HamiltonianModel base, double t1 = 0.0);

    /// Frame of an explicit H0(t). Commutation is checked pairwise on a grid of
    /// sample times over [t1, horizon]; FrameError when it fails.
    static InteractionFrame for_term(HamiltonianModel base, std::function<CMatrix(double)> h0, double t1,
                                     double horizon, const QuadratureConfig& cfg = {});

    const HamiltonianModel& base() const { return base_; }
    double t1() const { return t1_; }
    CMatrix h0(double t) const { return h0_(t); }
    bool has_scalar_drive() const { return drive_term_.has_value(); }
    const std::optional<DriveTerm>& drive_term() const { return drive_term_; }

    /// U(t) = exp(-i * integral of H0 over [t1, t]).
    CMatrix rotation(double t) const;

private:
    InteractionFrame(HamiltonianModel base, std::function<CMatrix(double)> h0, std::optional<DriveTerm> drive,
                     double t1, QuadratureConfig cfg);

    HamiltonianModel base_;
    std::function<CMatrix(double)> h0_;
    std::optional<DriveTerm> drive_term_;
    double t1_;
    QuadratureConfig cfg_;
};

/// U^dagger(t) (H(t) - H0(t)) U(t).
CMatrix to_interaction_picture(const InteractionFrame& frame, double t);

/// Omega(t) = integral of the drive frequency over [t1, t].
double phase_integral(const InteractionFrame& frame, double t);

/// Times in (t1, horizon] where the integral of exp(i Omega(s)) over [t1, t]
/// vanishes to within 1e-10.
std::vector<double> find_zero_integral_times(const InteractionFrame& frame, double horizon);

}  // namespace znh
