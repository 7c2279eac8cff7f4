#include "cca/rsgplus.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "cca/manifold.hpp"
#include "cca/rng.hpp"
#include "cca/validation.hpp"

namespace cca {

namespace {

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

// Cholesky-based orthonormal basis of span(z), the hot-path alternative to
// orthonormalize().  Returns false whenever the result is not verifiably
// orthonormal (ill-conditioned, rank-deficient, or non-finite input), in
// which case the caller must use the slower exact routine, whose rejection
// semantics stay authoritative.  The subsequent log depends only on the span,
// so which basis we hand it does not matter.
bool cholesky_basis(const Matrix& z, Matrix& q) {
  const Index k = z.cols();
  Eigen::LLT<Matrix> llt(Matrix(z.transpose() * z));
  if (llt.info() != Eigen::Success) {
    return false;
  }
  q = z;
  llt.matrixU().solveInPlace<Eigen::OnTheRight>(q);
  const Matrix gap = q.transpose() * q - Matrix::Identity(k, k);
  return gap.allFinite() && gap.cwiseAbs().maxCoeff() <= 1e-10;
}

// Sum of subspace logs from one view's block, with per-sub-block results
// stored by index and reduced serially so the parallel path is bit-identical
// to the serial one.  Returns the number of skipped sub-blocks.
int accumulate_logs(const Matrix& frame, const Eigen::Ref<const Matrix>& block,
                    Index sub_blocks, bool parallel, Matrix& sum_out) {
  const Index k = frame.cols();
  std::vector<Matrix> logs(static_cast<std::size_t>(sub_blocks));
  std::vector<unsigned char> ok(static_cast<std::size_t>(sub_blocks), 0);

  auto process = [&](Index l) {
    try {
      const Matrix z = block.middleRows(l * k, k).transpose();
      Matrix q;
      if (!cholesky_basis(z, q)) {
        q = orthonormalize(z);
      }
      logs[static_cast<std::size_t>(l)] = gr_log(frame, q);
      ok[static_cast<std::size_t>(l)] = 1;
    } catch (const NumericalError&) {
      // Rank-deficient or geometrically degenerate sub-block: drop it.
    }
  };

#ifdef _OPENMP
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (Index l = 0; l < sub_blocks; ++l) {
      process(l);
    }
  } else {
    for (Index l = 0; l < sub_blocks; ++l) {
      process(l);
    }
  }
#else
  (void)parallel;
  for (Index l = 0; l < sub_blocks; ++l) {
    process(l);
  }
#endif

  sum_out.setZero(frame.rows(), k);
  int skipped = 0;
  for (Index l = 0; l < sub_blocks; ++l) {
    if (ok[static_cast<std::size_t>(l)]) {
      sum_out += logs[static_cast<std::size_t>(l)];
    } else {
      ++skipped;
    }
  }
  return skipped;
}

void require_factor_shapes(const RsgState& s) {
  const Index k = s.k();
  if (k < 1 || s.d_x() < k || s.d_y() < k) {
    throw DimensionError("RsgState: frames must be tall d x k with d >= k >= 1");
  }
  if (s.v_tilde.cols() != k || s.s_u.rows() != k || s.s_u.cols() != k ||
      s.s_v.rows() != k || s.s_v.cols() != k || s.q_u.rows() != k ||
      s.q_u.cols() != k || s.q_v.rows() != k || s.q_v.cols() != k) {
    throw DimensionError("RsgState: factor shapes are inconsistent with k = " +
                         std::to_string(k));
  }
}

void require_block_pair(const RsgState& s, const Eigen::Ref<const Matrix>& xb,
                        const Eigen::Ref<const Matrix>& yb) {
  if (xb.rows() != yb.rows()) {
    throw DimensionError("paired blocks must have the same number of rows, got " +
                         std::to_string(xb.rows()) + " and " +
                         std::to_string(yb.rows()));
  }
  if (xb.rows() < 1) {
    throw DimensionError("sample block is empty");
  }
  if (xb.cols() != s.d_x() || yb.cols() != s.d_y()) {
    throw DimensionError("sample block width does not match the state: expected " +
                         std::to_string(s.d_x()) + " and " + std::to_string(s.d_y()) +
                         " columns, got " + std::to_string(xb.cols()) + " and " +
                         std::to_string(yb.cols()));
  }
}

}  // namespace

RsgState RsgState::random(Index d_x, Index d_y, Index k, std::uint64_t seed) {
  if (k < 1 || d_x < k || d_y < k) {
    throw DimensionError("RsgState::random: need d_x >= k >= 1 and d_y >= k");
  }
  NormalSampler rng(seed);
  RsgState s;
  s.u_tilde = orthonormalize(rng.matrix(d_x, k));
  s.v_tilde = orthonormalize(rng.matrix(d_y, k));
  s.s_u = Matrix::Identity(k, k);
  s.s_v = Matrix::Identity(k, k);
  s.q_u = Matrix::Identity(k, k);
  s.q_v = Matrix::Identity(k, k);
  return s;
}

PcaGradient pca_gradient(const RsgState& state, const Eigen::Ref<const Matrix>& x_block,
                         const Eigen::Ref<const Matrix>& y_block, bool parallel) {
  require_factor_shapes(state);
  require_block_pair(state, x_block, y_block);

  const Index blocks = x_block.rows() / state.k();
  PcaGradient out;
  out.base_u = state.u_tilde;
  out.base_v = state.v_tilde;
  out.skipped_blocks =
      accumulate_logs(state.u_tilde, x_block, blocks, parallel, out.u_tilde);
  out.skipped_blocks +=
      accumulate_logs(state.v_tilde, y_block, blocks, parallel, out.v_tilde);

  // The logs point toward the observed subspaces (ascent); flip them so the
  // result is a descent direction like every other gradient in the step.
  out.u_tilde = -out.u_tilde;
  out.v_tilde = -out.v_tilde;
  return out;
}

FactorGradients cca_euclidean_gradients(const RsgState& state, const Matrix& c_xy) {
  require_factor_shapes(state);
  if (c_xy.rows() != state.d_x() || c_xy.cols() != state.d_y()) {
    throw DimensionError("cca_euclidean_gradients: c_xy must be " +
                         std::to_string(state.d_x()) + "x" +
                         std::to_string(state.d_y()));
  }

  // The two d^2 k products are shared by every factor's gradient.
  const Matrix cv = c_xy * state.v_tilde;
  const Matrix cu = c_xy.transpose() * state.u_tilde;
  const Matrix m = state.u_tilde.transpose() * cv;
  const Matrix su_qu = state.s_u * state.q_u;
  const Matrix sv_qv = state.s_v * state.q_v;

  FactorGradients g;
  g.u_tilde = cv * (sv_qv * state.q_u.transpose() * state.s_u.transpose());
  g.v_tilde = cu * (su_qu * state.q_v.transpose() * state.s_v.transpose());
  g.s_u = m * sv_qv * state.q_u.transpose();
  g.q_u = state.s_u.transpose() * m * sv_qv;
  g.s_v = m.transpose() * su_qu * state.q_v.transpose();
  g.q_v = state.s_v.transpose() * m.transpose() * su_qu;
  return g;
}

void riemannian_project(FactorGradients& g, const RsgState& state,
                        ProjectionVariant variant) {
  if (variant == ProjectionVariant::Standard) {
    g.u_tilde = project_stiefel(state.u_tilde, g.u_tilde);
    g.v_tilde = project_stiefel(state.v_tilde, g.v_tilde);
    g.q_u = project_rotation(g.q_u);
    g.q_v = project_rotation(g.q_v);
  } else {
    g.u_tilde = project_stiefel_orthogonal(state.u_tilde, g.u_tilde);
    g.v_tilde = project_stiefel_orthogonal(state.v_tilde, g.v_tilde);
    g.q_u = project_rotation_orthogonal(state.q_u.transpose() * g.q_u);
    g.q_v = project_rotation_orthogonal(state.q_v.transpose() * g.q_v);
  }
  g.s_u = project_upper(g.s_u);
  g.s_v = project_upper(g.s_v);
}

FactorGradients combine_gradients(const FactorGradients& coupling_descent,
                                  const PcaGradient& pca, const RsgState& state) {
  if (!bitwise_equal(pca.base_u, state.u_tilde) ||
      !bitwise_equal(pca.base_v, state.v_tilde)) {
    throw StaleGradientError("combine_gradients: variance-term gradient was "
                             "computed at a different iterate than the one "
                             "being updated");
  }
  FactorGradients out = coupling_descent;
  out.u_tilde += pca.u_tilde;
  out.v_tilde += pca.v_tilde;
  return out;
}

double coupling_objective(const RsgState& state, const Matrix& c_xy) {
  return (state.u().transpose() * c_xy * state.v()).trace();
}

double pca_objective(const RsgState& state, const Matrix& c_x, const Matrix& c_y) {
  return (state.u_tilde.transpose() * c_x * state.u_tilde).trace() +
         (state.v_tilde.transpose() * c_y * state.v_tilde).trace();
}

double total_objective(const RsgState& state, const Matrix& c_x, const Matrix& c_y,
                       const Matrix& c_xy) {
  return coupling_objective(state, c_xy) + pca_objective(state, c_x, c_y);
}

double schedule_gamma(double gamma0, Schedule schedule, std::uint64_t j) {
  switch (schedule) {
    case Schedule::InverseT:
      return gamma0 / static_cast<double>(j + 1);
    case Schedule::Constant:
      return gamma0;
  }
  throw ConfigError("schedule_gamma: unknown schedule");
}

RsgPlus::RsgPlus(RsgState initial, RsgOptions options)
    : state_(std::move(initial)), options_(options) {
  require_factor_shapes(state_);
  if (!(options_.gamma0 > 0.0)) {
    throw ConfigError("RsgPlus: gamma0 must be positive");
  }
}

StepStats RsgPlus::step(const Eigen::Ref<const Matrix>& x_block,
                        const Eigen::Ref<const Matrix>& y_block, bool parallel) {
  require_block_pair(state_, x_block, y_block);
  const double gamma = schedule_gamma(options_.gamma0, options_.schedule, j_);

  PcaGradient pg = pca_gradient(state_, x_block, y_block, parallel);

  const double inv_rows = 1.0 / static_cast<double>(x_block.rows());
  const Matrix c_xy_batch = (x_block.transpose() * y_block) * inv_rows;
  const Matrix* c_xy = &c_xy_batch;
  if (options_.running_cov) {
    if (averaged_cov_ == 0) {
      c_xy_avg_ = c_xy_batch;
    } else {
      const double folded = static_cast<double>(averaged_cov_);
      c_xy_avg_ = (c_xy_avg_ * folded + c_xy_batch) / (folded + 1.0);
    }
    ++averaged_cov_;
    c_xy = &c_xy_avg_;
  }

  FactorGradients g = cca_euclidean_gradients(state_, *c_xy);
  g.u_tilde = -g.u_tilde;
  g.v_tilde = -g.v_tilde;
  g.s_u = -g.s_u;
  g.s_v = -g.s_v;
  g.q_u = -g.q_u;
  g.q_v = -g.q_v;
  riemannian_project(g, state_, options_.projection);

  const FactorGradients total = combine_gradients(g, pg, state_);

  StepStats stats;
  stats.gamma = gamma;
  stats.skipped_blocks = pg.skipped_blocks;
  for (const Matrix* t : {&total.u_tilde, &total.v_tilde, &total.s_u, &total.s_v,
                          &total.q_u, &total.q_v}) {
    stats.max_update_norm = std::max(stats.max_update_norm, gamma * t->norm());
  }

  state_.u_tilde = st_exp(state_.u_tilde, -gamma * total.u_tilde);
  state_.v_tilde = st_exp(state_.v_tilde, -gamma * total.v_tilde);
  state_.s_u -= gamma * total.s_u;
  state_.s_v -= gamma * total.s_v;
  state_.q_u = so_exp(state_.q_u, state_.q_u * (-gamma * total.q_u));
  state_.q_v = so_exp(state_.q_v, state_.q_v * (-gamma * total.q_v));
  ++j_;

  // Feasibility watchdog: every step when assertions are on, sampled in
  // optimized builds.
#ifndef NDEBUG
  check_state(state_);
#else
  if (j_ % 100 == 0) {
    check_state(state_);
  }
#endif
  return stats;
}

}  // namespace cca
