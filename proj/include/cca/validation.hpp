#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "cca/exact.hpp"
#include "cca/rsgplus.hpp"
#include "cca/types.hpp"

namespace cca {

// Deviation of a frame from orthonormality: ||x^T x - I||_F.
double orthonormality_residual(const Matrix& x);

// Deviation of a projection from whitening a covariance: ||w^T c w - I||_F.
double whitening_residual(const Matrix& w, const Matrix& c);

bool is_orthonormal(const Matrix& x, double tol = tol_orthonormal);
bool is_rotation(const Matrix& q, double tol_orth = tol_orthonormal,
                 double tol_det = tol_determinant);
bool is_upper_triangular(const Matrix& s, double tol = tol_tangent);

// Verifies every factor of an iterate: shapes consistent, frames orthonormal,
// q factors proper rotations, s factors upper triangular.  Throws
// DimensionError or NumericalError naming the offending factor.
void check_state(const RsgState& state);

// The six iterate factors, in the fixed order used by FdReport.
enum class FactorId { UTilde, VTilde, SU, SV, QU, QV };

inline constexpr std::array<const char*, 6> factor_names = {
    "u_tilde", "v_tilde", "s_u", "s_v", "q_u", "q_v"};

// Central-difference derivative of an arbitrary scalar function of the
// iterate with respect to the raw ambient entries of one factor:
// (f(theta + h E_ij) - f(theta - h E_ij)) / (2h) per entry.  Manifold
// constraints are intentionally ignored; this probes Euclidean gradients
// before any tangent projection.  Requires h > 0.
Matrix finite_diff_gradient(const std::function<double(const RsgState&)>& objective,
                            const RsgState& state, FactorId factor, double h);

// Result of checking analytic coupling-term gradients against central finite
// differences of an independently coded objective evaluation.
struct FdReport {
  std::array<double, 6> rel_error{};  // per factor, FactorId order
  double h = 0.0;
  std::uint64_t state_fingerprint = 0;  // hash of the probed iterate's bytes

  double max_rel_error() const;
};

// Runs the finite-difference probe for all six factors of the coupling term
// trace(U^T c_xy V) at `state` and compares against the supplied analytic
// gradients.  Relative error per factor is ||G_fd - G||_F / max(1, ||G||_F).
FdReport compare_to_finite_differences(const RsgState& state, const Matrix& c_xy,
                                       const FactorGradients& analytic, double h);

// Small-instance CCA solved by a deliberately different route: covariances
// accumulated by explicit loops, eigendecompositions by cyclic Jacobi
// rotations, and the correlations read off a symmetric embedding of the
// whitened cross-covariance.  Shares no numerical code with exact_cca, so
// agreement between the two is a meaningful cross-check.  Inputs are
// restricted to d <= 30 and N <= 5000.
CcaSolution brute_force_cca(const Matrix& x, const Matrix& y, Index k);

// Principal angles (radians, ascending) between the column spans of a and b.
Vector principal_angles(const Matrix& a, const Matrix& b);

// Convergence-precondition diagnostics of a finished (or in-progress) run.
// Field names match the serialized diagnostics report.
struct DiagnosticsReport {
  double e = 0.0;            // coupling-objective gap vs the exact solution
  double bound_x = 0.0;      // reconstruction bound of the first view's frame
  double bound_y = 0.0;      // reconstruction bound of the second view's frame
  double whitening_u = 0.0;  // ||U^T C_x U - I||_F at the composed projection
  double whitening_v = 0.0;  // ||V^T C_y V - I||_F
  double max_update_norm = 0.0;  // largest gamma * ||tangent|| seen in the run
  double ball_radius = 0.0;      // safe-step radius the update norms are
                                 // compared against
};

DiagnosticsReport run_diagnostics(const RsgState& state,
                                  const CovarianceTriple& cov,
                                  const CcaSolution& exact,
                                  double max_update_norm);

}  // namespace cca
