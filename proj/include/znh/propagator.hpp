#pragma once

// Reference integration of d(psi)/dt = -i H(t) psi. No renormalization is ever
// applied: non-Hermitian evolution changes the norm and that is the signal.

#include <optional>

#include "znh/models.hpp"

namespace znh {

enum class PropagationMethod { rk4, dopri5 };

struct PropagationConfig {
    PropagationMethod method = PropagationMethod::dopri5;
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    /// Step ceiling; defaults to a twentieth of the fastest period.
    std::optional<double> max_step;
    /// Fixed-step mode only.
    int steps_per_period = 200;

    void validate() const;
};

/// Characteristic angular frequency used to size steps: the larger of the
/// model's drive frequency and a norm bound of H sampled on [t1, t2].
double characteristic_frequency(const HamiltonianModel& model, double t1, double t2);

StateVector propagate(const HamiltonianModel& model, const StateVector& psi0, double t1, double t2,
                      const PropagationConfig& cfg = {});

/// Continues an already evolved (possibly unnormalized) state from t1 to t2.
StateVector advance(const HamiltonianModel& model, const StateVector& psi, double t1, double t2,
                    const PropagationConfig& cfg = {});

/// |<psi0|psi(t2)>|^2; exceeds 1 under gain.
double survival_exact(const HamiltonianModel& model, const StateVector& psi0, double t1, double t2,
                      const PropagationConfig& cfg = {});

/// T(t2, t1), one column per propagated basis vector.
CMatrix propagator_matrix(const HamiltonianModel& model, double t1, double t2, const PropagationConfig& cfg = {});

}  // namespace znh
