#pragma once

// Dense complex operators on small Hilbert spaces (hbar = 1 throughout).

#include <complex>
#include <utility>

#include <Eigen/Dense>

#include "znh/errors.hpp"

namespace znh {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Normalization tolerance applied to every state flagged as normalized.
inline constexpr double kNormTolerance = 1e-12;

struct HermitianParts {
    CMatrix hermitian;       // (H + H^dagger) / 2
    CMatrix anti_hermitian;  // (H - H^dagger) / 2
};

void require_square(const CMatrix& m, const char* what);
void require_finite(const CMatrix& m, const char* what);
void require_same_dim(const CMatrix& a, const CMatrix& b, const char* what);
void require_state(const CMatrix& a, const StateVector& psi, const char* what);
void require_normalized(const StateVector& psi, const char* what);

/// Splits H into its Hermitian and anti-Hermitian parts. The parts sum back
/// to H exactly in floating point only up to one rounding per entry.
HermitianParts hermitian_split(const CMatrix& h);

/// Largest absolute entry.
double max_abs(const CMatrix& m);

/// True when ||A - A^dagger||_inf <= rel_tol * ||A||_inf.
bool is_hermitian(const CMatrix& a, double rel_tol = 1e-14);
bool is_anti_hermitian(const CMatrix& a, double rel_tol = 1e-14);

/// <psi|A|psi> for a normalized psi.
Complex expectation(const CMatrix& a, const StateVector& psi);

/// Pseudo-variance <A^2> + <A>^2.
Complex delta_plus(const CMatrix& a, const StateVector& psi);

/// Ordinary variance <A^2> - <A>^2.
Complex delta_minus(const CMatrix& a, const StateVector& psi);

CMatrix commutator(const CMatrix& a, const CMatrix& b);

/// exp(A) by Pade(13) scaling and squaring.
CMatrix expm(const CMatrix& a);

StateVector normalized(StateVector psi);

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

// Two-level states in the sigma_z eigenbasis: |+> = (1,0), |-> = (0,1).
namespace ket {
StateVector plus();
StateVector minus();
StateVector plus_x();   // (|+> + |->)/sqrt2
StateVector minus_x();  // (|+> - |->)/sqrt2
StateVector plus_y();   // (|+> + i|->)/sqrt2
StateVector minus_y();  // (|+> - i|->)/sqrt2
}  // namespace ket

/// Jump operators |+>_x x<-| and |->_x x<+| in the sigma_x eigenbasis.
CMatrix tau_plus();
CMatrix tau_minus();

}  // namespace znh
