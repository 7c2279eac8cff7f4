#pragma once

#include <cstdint>

#include "cca/types.hpp"

namespace cca {

// Factored iterate of the streaming optimizer.  The working projections are
// reconstructed as U = u_tilde * s_u * q_u and V = v_tilde * s_v * q_v, where
// the frames are orthonormal, s_* are upper triangular, and q_* are rotations.
struct RsgState {
  Matrix u_tilde;  // d_x x k orthonormal frame
  Matrix v_tilde;  // d_y x k orthonormal frame
  Matrix s_u;      // k x k upper triangular
  Matrix s_v;      // k x k upper triangular
  Matrix q_u;      // k x k rotation
  Matrix q_v;      // k x k rotation

  Index d_x() const { return u_tilde.rows(); }
  Index d_y() const { return v_tilde.rows(); }
  Index k() const { return u_tilde.cols(); }

  Matrix u() const { return u_tilde * s_u * q_u; }
  Matrix v() const { return v_tilde * s_v * q_v; }

  // Random orthonormal frames; identity triangular and rotation factors.
  static RsgState random(Index d_x, Index d_y, Index k, std::uint64_t seed);
};

// One gradient (or tangent) entry per factor.  Frame entries are ambient
// d x k matrices; s entries are upper-triangular k x k; q entries hold the
// skew-symmetric generator W of the update q <- q * expm(-gamma W).
struct FactorGradients {
  Matrix u_tilde, v_tilde, s_u, s_v, q_u, q_v;
};

// Subspace-averaging gradient of the variance terms, estimated from one data
// block.  Also records the frames it was computed at so it cannot silently be
// combined against a different iterate.
struct PcaGradient {
  Matrix u_tilde;      // tangent at the recorded u frame
  Matrix v_tilde;      // tangent at the recorded v frame
  Matrix base_u;       // frame snapshot for staleness detection
  Matrix base_v;
  int skipped_blocks = 0;  // sub-blocks dropped for rank or geometry failures
};

// Variance-term gradient from one block of paired samples (rows are samples).
// Each view's block is cut into floor(B/k) sub-blocks of k rows (the
// remainder is dropped); each sub-block is transposed, orthonormalized, and
// pulled back through the subspace logarithm at the current frame.  The
// returned tangents are minus the sum of those logs, i.e. descent directions
// for the negated objective, ready to be combined and fed to update paths
// of the form exp(-gamma * g).  Sub-blocks that are rank-deficient or
// orthogonal to the current frame are skipped and counted.
//
// With `parallel` set the sub-block work is distributed over OpenMP threads;
// per-block results are stored by index and reduced in a fixed serial order,
// so the result is bit-identical to the serial path.
PcaGradient pca_gradient(const RsgState& state, const Eigen::Ref<const Matrix>& x_block,
                         const Eigen::Ref<const Matrix>& y_block, bool parallel = false);

// Euclidean ascent gradients of the coupling term trace(U^T C_xy V) with
// respect to all six factors, evaluated at `state` for a batch cross
// covariance.  These are raw ambient derivatives: negate for descent, then
// project with riemannian_project before stepping.
FactorGradients cca_euclidean_gradients(const RsgState& state, const Matrix& c_xy);

// Gradient-projection variant.  The standard forms are what the update rules
// are defined with; the orthogonal variant substitutes the idempotent
// Euclidean tangent projections for ablation studies.
enum class ProjectionVariant { Standard, Orthogonal };

// In-place tangent projection of Euclidean factor gradients:
//   frames:    G - X G^T X        (orthogonal: G - X sym(X^T G))
//   rotations: G - G^T            (orthogonal: skew(Q^T G); both stored as
//                                  the skew generator of the update)
//   triangles: upper(G)
void riemannian_project(FactorGradients& g, const RsgState& state,
                        ProjectionVariant variant = ProjectionVariant::Standard);

// Merges the variance-term gradient into the frame slots of the projected
// coupling gradient.  Throws StaleGradientError unless the PcaGradient was
// computed at bit-identical frames to `state`.
FactorGradients combine_gradients(const FactorGradients& coupling_descent,
                                  const PcaGradient& pca, const RsgState& state);

// Objective pieces, evaluated against reference covariances.
double coupling_objective(const RsgState& state, const Matrix& c_xy);
double pca_objective(const RsgState& state, const Matrix& c_x, const Matrix& c_y);
double total_objective(const RsgState& state, const Matrix& c_x, const Matrix& c_y,
                       const Matrix& c_xy);

enum class Schedule { InverseT, Constant };

// Step size at 0-based step j:  gamma0 / (j + 1)  or  gamma0.
double schedule_gamma(double gamma0, Schedule schedule, std::uint64_t j);

struct StepStats {
  double gamma = 0.0;
  int skipped_blocks = 0;
  double max_update_norm = 0.0;  // largest gamma * ||tangent|| over the factors
};

struct RsgOptions {
  double gamma0 = 1.0;
  Schedule schedule = Schedule::InverseT;
  ProjectionVariant projection = ProjectionVariant::Standard;
  // With running_cov set, the coupling gradient uses the average of all
  // cross-covariance batches seen so far instead of the current batch only.
  bool running_cov = false;
};

// Streaming optimizer: one paired sample block per step.  After each update
// the iterate's manifold invariants are verified (every step in debug
// builds, every 100th step otherwise); violations raise NumericalError.
class RsgPlus {
 public:
  RsgPlus(RsgState initial, RsgOptions options);

  // Consumes one block (rows are samples) and advances the iterate.
  StepStats step(const Eigen::Ref<const Matrix>& x_block,
                 const Eigen::Ref<const Matrix>& y_block, bool parallel = false);

  const RsgState& state() const { return state_; }
  std::uint64_t steps_taken() const { return j_; }
  const RsgOptions& options() const { return options_; }

  // Restores a resumed run's position in the step-size schedule.  The
  // running cross-covariance average (if enabled) restarts from the next
  // batch; it is not part of the checkpoint format.
  void set_steps_taken(std::uint64_t j) { j_ = j; }

 private:
  RsgState state_;
  RsgOptions options_;
  Matrix c_xy_avg_;                 // running average when options_.running_cov
  std::uint64_t averaged_cov_ = 0;  // batches folded into c_xy_avg_
  std::uint64_t j_ = 0;
};

}  // namespace cca
