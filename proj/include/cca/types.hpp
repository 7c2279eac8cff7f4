#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace cca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Shared numerical tolerances.  These values are referenced throughout the
// library and the test suite; change them in one place only.
inline constexpr double tol_orthonormal = 1e-8;   // ||X^T X - I||_F limit
inline constexpr double tol_tangent = 1e-8;       // tangent-space membership
inline constexpr double tol_determinant = 1e-8;   // |det Q - 1| limit
inline constexpr double tol_rank_rel = 1e-12;     // sigma_min / sigma_max limit
inline constexpr double tol_angle = 1e-6;         // log branch-cut guard
inline constexpr double tol_whitening = 1e-6;     // ||U^T C U - I||_F limit
inline constexpr double tol_eigengap = 1e-10;     // spectral gap guard

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatches and unsupported sizes.
struct DimensionError : Error {
  using Error::Error;
};

// Numerical degeneracies: rank-deficient retractions, orthogonal subspaces,
// log branch cuts, indefinite covariances, degenerate oracles.
struct NumericalError : Error {
  using Error::Error;
};

// Malformed or inconsistent input data (files, streams).
struct DataError : Error {
  using Error::Error;
};

// Invalid configuration values or unknown keys.
struct ConfigError : Error {
  using Error::Error;
};

// Gradient combined against a state it was not computed at.
struct StaleGradientError : Error {
  using Error::Error;
};

}  // namespace cca
