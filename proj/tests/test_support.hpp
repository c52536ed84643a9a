#pragma once

#include <random>

#include "znh/models.hpp"
#include "znh/operator_core.hpp"

namespace znh::testing {

inline CMatrix random_matrix(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = Complex(normal(rng), normal(rng));
    return m;
}

inline CMatrix random_hermitian(std::mt19937_64& rng, Eigen::Index n, double scale = 1.0) {
    const CMatrix m = random_matrix(rng, n, scale);
    return 0.5 * (m + m.adjoint());
}

inline StateVector random_state(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    StateVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(normal(rng), normal(rng));
    return normalized(v);
}

/// Random Fourier Hamiltonian with `modes` modes, frequencies in [0.5, 3],
/// coefficients of size ~scale.
inline FourierHamiltonian random_fourier(std::mt19937_64& rng, Eigen::Index n, int modes, double scale) {
    std::uniform_real_distribution<double> freq(0.5, 3.0);
    FourierHamiltonian f;
    f.static_term = random_matrix(rng, n, scale);
    for (int k = 0; k < modes; ++k)
        f.modes.push_back({freq(rng), random_matrix(rng, n, scale), random_matrix(rng, n, scale)});
    return f;
}

}  // namespace znh::testing
