#include "znh/operator_core.hpp"

#include <array>
#include <cmath>
#include <string>

namespace znh {

namespace {

std::string dims(const CMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void require_square(const CMatrix& m, const char* what) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " + dims(m));
}

void require_finite(const CMatrix& m, const char* what) {
    if (!m.allFinite())
        throw DomainError(std::string(what) + ": matrix has non-finite entries");
}

void require_same_dim(const CMatrix& a, const CMatrix& b, const char* what) {
    require_square(a, what);
    require_square(b, what);
    if (a.rows() != b.rows())
        throw DimensionError(std::string(what) + ": dimension mismatch " + dims(a) + " vs " + dims(b));
}

void require_state(const CMatrix& a, const StateVector& psi, const char* what) {
    require_square(a, what);
    if (psi.size() != a.rows())
        throw DimensionError(std::string(what) + ": state of size " + std::to_string(psi.size()) +
                             " does not match operator " + dims(a));
}

void require_normalized(const StateVector& psi, const char* what) {
    if (psi.size() == 0 || !psi.allFinite())
        throw DomainError(std::string(what) + ": state must be non-empty and finite");
    if (std::abs(psi.norm() - 1.0) > kNormTolerance)
        throw DomainError(std::string(what) + ": state is not normalized (norm " +
                          std::to_string(psi.norm()) + ")");
}

HermitianParts hermitian_split(const CMatrix& h) {
    require_square(h, "hermitian_split");
    require_finite(h, "hermitian_split");
    const CMatrix hd = h.adjoint();
    return {(h + hd) * 0.5, (h - hd) * 0.5};
}

double max_abs(const CMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

bool is_hermitian(const CMatrix& a, double rel_tol) {
    require_square(a, "is_hermitian");
    return max_abs(a - a.adjoint()) <= rel_tol * max_abs(a);
}

bool is_anti_hermitian(const CMatrix& a, double rel_tol) {
    require_square(a, "is_anti_hermitian");
    return max_abs(a + a.adjoint()) <= rel_tol * max_abs(a);
}

Complex expectation(const CMatrix& a, const StateVector& psi) {
    require_state(a, psi, "expectation");
    return psi.dot(a * psi);  // dot() conjugates the left operand
}

Complex delta_plus(const CMatrix& a, const StateVector& psi) {
    require_state(a, psi, "delta_plus");
    const StateVector a_psi = a * psi;
    const Complex mean = psi.dot(a_psi);
    return psi.dot(a * a_psi) + mean * mean;
}

Complex delta_minus(const CMatrix& a, const StateVector& psi) {
    require_state(a, psi, "delta_minus");
    const StateVector a_psi = a * psi;
    const Complex mean = psi.dot(a_psi);
    return psi.dot(a * a_psi) - mean * mean;
}

CMatrix commutator(const CMatrix& a, const CMatrix& b) {
    require_same_dim(a, b, "commutator");
    return a * b - b * a;
}

// Higham, "The scaling and squaring method for the matrix exponential
// revisited" (2005), degree-13 variant with theta_13 = 5.37.
CMatrix expm(const CMatrix& a) {
    require_square(a, "expm");
    require_finite(a, "expm");
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    const Eigen::Index n = a.rows();
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13)
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    const CMatrix x = a / std::ldexp(1.0, squarings);

    const CMatrix id = CMatrix::Identity(n, n);
    const CMatrix x2 = x * x;
    const CMatrix x4 = x2 * x2;
    const CMatrix x6 = x4 * x2;
    const CMatrix u =
        x * (x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id);
    const CMatrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    CMatrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

StateVector normalized(StateVector psi) {
    const double n = psi.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("normalized: zero or non-finite state");
    psi /= n;
    return psi;
}

namespace pauli {

CMatrix identity() { return CMatrix::Identity(2, 2); }

CMatrix x() {
    CMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

CMatrix y() {
    CMatrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

CMatrix z() {
    CMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

}  // namespace pauli

namespace ket {

namespace {
StateVector two(Complex a, Complex b) {
    StateVector v(2);
    v << a, b;
    return v;
}
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);
}  // namespace

StateVector plus() { return two(1.0, 0.0); }
StateVector minus() { return two(0.0, 1.0); }
StateVector plus_x() { return two(kInvSqrt2, kInvSqrt2); }
StateVector minus_x() { return two(kInvSqrt2, -kInvSqrt2); }
StateVector plus_y() { return two(kInvSqrt2, kI * kInvSqrt2); }
StateVector minus_y() { return two(kInvSqrt2, -kI * kInvSqrt2); }

}  // namespace ket

CMatrix tau_plus() { return ket::plus_x() * ket::minus_x().adjoint(); }
CMatrix tau_minus() { return ket::minus_x() * ket::plus_x().adjoint(); }

}  // namespace znh
