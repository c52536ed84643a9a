#pragma once

#include <stdexcept>
#include <string>

namespace znh {

/// Operand shapes do not agree (non-square matrix, mismatched dims).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A parameter or input lies outside its documented domain.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Unknown preset, malformed config, bad CLI value.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The chosen H0 term does not commute with itself at different times.
class FrameError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base for failures of a numerical engine (quadrature, propagation).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StiffnessError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class DivergenceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace znh
