#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nah {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr Complex kJ{0.0, 1.0};

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid geometry, scene or experiment settings.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (shape, kind, frequency).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Green's kernel evaluated at coincident points.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside a solver (non-finite values, divergence).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Reading or writing files.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nah
