#include "cca/validation.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <string>
#include <vector>

#include "cca/manifold.hpp"

namespace cca {

double orthonormality_residual(const Matrix& x) {
  const Index k = x.cols();
  return (x.transpose() * x - Matrix::Identity(k, k)).norm();
}

double whitening_residual(const Matrix& w, const Matrix& c) {
  if (c.rows() != c.cols() || w.rows() != c.rows()) {
    throw DimensionError("whitening_residual: shape mismatch");
  }
  const Index k = w.cols();
  return (w.transpose() * c * w - Matrix::Identity(k, k)).norm();
}

bool is_orthonormal(const Matrix& x, double tol) {
  return x.rows() >= x.cols() && x.cols() >= 1 &&
         orthonormality_residual(x) <= tol;
}

bool is_rotation(const Matrix& q, double tol_orth, double tol_det) {
  return q.rows() == q.cols() && q.rows() >= 1 &&
         orthonormality_residual(q) <= tol_orth &&
         std::abs(q.determinant() - 1.0) <= tol_det;
}

bool is_upper_triangular(const Matrix& s, double tol) {
  if (s.rows() != s.cols() || s.rows() < 1) {
    return false;
  }
  double below = 0.0;
  for (Index j = 0; j < s.cols(); ++j) {
    for (Index i = j + 1; i < s.rows(); ++i) {
      below = std::max(below, std::abs(s(i, j)));
    }
  }
  return below <= tol;
}

void check_state(const RsgState& state) {
  const Index k = state.u_tilde.cols();
  if (k < 1 || state.u_tilde.rows() < k || state.v_tilde.rows() < k ||
      state.v_tilde.cols() != k) {
    throw DimensionError("check_state: frames must be tall d x k with the "
                         "same k and d >= k >= 1");
  }
  for (const auto& [m, name] : {std::pair{&state.s_u, "s_u"},
                                std::pair{&state.s_v, "s_v"},
                                std::pair{&state.q_u, "q_u"},
                                std::pair{&state.q_v, "q_v"}}) {
    if (m->rows() != k || m->cols() != k) {
      throw DimensionError(std::string("check_state: ") + name + " must be " +
                           std::to_string(k) + "x" + std::to_string(k));
    }
  }
  if (!is_orthonormal(state.u_tilde)) {
    throw NumericalError("check_state: u_tilde is not orthonormal");
  }
  if (!is_orthonormal(state.v_tilde)) {
    throw NumericalError("check_state: v_tilde is not orthonormal");
  }
  if (!is_rotation(state.q_u)) {
    throw NumericalError("check_state: q_u is not a proper rotation");
  }
  if (!is_rotation(state.q_v)) {
    throw NumericalError("check_state: q_v is not a proper rotation");
  }
  if (!is_upper_triangular(state.s_u)) {
    throw NumericalError("check_state: s_u is not upper triangular");
  }
  if (!is_upper_triangular(state.s_v)) {
    throw NumericalError("check_state: s_v is not upper triangular");
  }
}

namespace {

Matrix& factor_of(RsgState& state, FactorId factor) {
  switch (factor) {
    case FactorId::UTilde: return state.u_tilde;
    case FactorId::VTilde: return state.v_tilde;
    case FactorId::SU: return state.s_u;
    case FactorId::SV: return state.s_v;
    case FactorId::QU: return state.q_u;
    case FactorId::QV: return state.q_v;
  }
  throw ConfigError("factor_of: unknown factor id");
}

const Matrix& factor_of(const RsgState& state, FactorId factor) {
  return factor_of(const_cast<RsgState&>(state), factor);
}

// Coupling objective coded locally so the finite-difference probe does not
// share an evaluation path with the gradient code it checks.
double coupling_value(const RsgState& s, const Matrix& c_xy) {
  const Matrix u = s.u_tilde * s.s_u * s.q_u;
  const Matrix v = s.v_tilde * s.s_v * s.q_v;
  return (u.transpose() * c_xy * v).trace();
}

std::uint64_t fnv1a_bytes(std::uint64_t hash, const Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      std::uint64_t bits = 0;
      const double value = m(i, j);
      std::memcpy(&bits, &value, sizeof(bits));
      for (int b = 0; b < 8; ++b) {
        hash ^= (bits >> (8 * b)) & 0xffu;
        hash *= 1099511628211ull;
      }
    }
  }
  return hash;
}

std::uint64_t state_fingerprint(const RsgState& s) {
  std::uint64_t hash = 1469598103934665603ull;
  for (const Matrix* m : {&s.u_tilde, &s.v_tilde, &s.s_u, &s.s_v, &s.q_u, &s.q_v}) {
    hash = fnv1a_bytes(hash, *m);
  }
  return hash;
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix: rotations zero one
// off-diagonal pair at a time until the off-diagonal mass is negligible.
// Kept free of any shared code with the eigensolver behind exact_cca.
void jacobi_eigen(Matrix a, Vector& eigenvalues, Matrix& eigenvectors) {
  const Index n = a.rows();
  eigenvectors = Matrix::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        off += a(p, q) * a(p, q);
      }
    }
    if (std::sqrt(2.0 * off) <= 1e-14 * scale) {
      break;
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) {
          continue;
        }
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double apq = a(p, q);
        for (Index i = 0; i < n; ++i) {
          if (i == p || i == q) {
            continue;
          }
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(p, i) = a(i, p);
          a(i, q) = s * aip + c * aiq;
          a(q, i) = a(i, q);
        }
        a(p, p) = c * c * app - 2.0 * s * c * apq + s * s * aqq;
        a(q, q) = s * s * app + 2.0 * s * c * apq + c * c * aqq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Index i = 0; i < n; ++i) {
          const double vip = eigenvectors(i, p);
          const double viq = eigenvectors(i, q);
          eigenvectors(i, p) = c * vip - s * viq;
          eigenvectors(i, q) = s * vip + c * viq;
        }
      }
    }
  }
  eigenvalues = a.diagonal();
}

// Jacobi-based whitening transform C^{-1/2} with a tiny floor against exact
// singularity; rejects clearly indefinite inputs.
Matrix jacobi_inverse_sqrt(const Matrix& c) {
  Vector lambda;
  Matrix e;
  jacobi_eigen(0.5 * (c + c.transpose()), lambda, e);
  const double lambda_max = lambda.maxCoeff();
  Vector inv_sqrt(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) < -1e-10 * std::max(1.0, lambda_max)) {
      throw NumericalError("brute_force_cca: covariance is indefinite");
    }
    inv_sqrt(i) = 1.0 / std::sqrt(std::max(lambda(i), 1e-12));
  }
  return e * inv_sqrt.asDiagonal() * e.transpose();
}

}  // namespace

Matrix finite_diff_gradient(const std::function<double(const RsgState&)>& objective,
                            const RsgState& state, FactorId factor, double h) {
  if (!(h > 0.0)) {
    throw ConfigError("finite_diff_gradient: h must be positive");
  }
  RsgState probe = state;
  Matrix& slot = factor_of(probe, factor);
  Matrix grad(slot.rows(), slot.cols());
  for (Index j = 0; j < slot.cols(); ++j) {
    for (Index i = 0; i < slot.rows(); ++i) {
      const double saved = slot(i, j);
      slot(i, j) = saved + h;
      const double plus = objective(probe);
      slot(i, j) = saved - h;
      const double minus = objective(probe);
      slot(i, j) = saved;
      grad(i, j) = (plus - minus) / (2.0 * h);
    }
  }
  return grad;
}

double FdReport::max_rel_error() const {
  return *std::max_element(rel_error.begin(), rel_error.end());
}

FdReport compare_to_finite_differences(const RsgState& state, const Matrix& c_xy,
                                       const FactorGradients& analytic, double h) {
  const auto objective = [&c_xy](const RsgState& s) {
    return coupling_value(s, c_xy);
  };
  const std::array<const Matrix*, 6> reference = {
      &analytic.u_tilde, &analytic.v_tilde, &analytic.s_u,
      &analytic.s_v,     &analytic.q_u,     &analytic.q_v};
  const std::array<FactorId, 6> factors = {FactorId::UTilde, FactorId::VTilde,
                                           FactorId::SU,     FactorId::SV,
                                           FactorId::QU,     FactorId::QV};
  FdReport report;
  report.h = h;
  report.state_fingerprint = state_fingerprint(state);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Matrix fd = finite_diff_gradient(objective, state, factors[f], h);
    report.rel_error[f] =
        (fd - *reference[f]).norm() / std::max(1.0, reference[f]->norm());
  }
  return report;
}

CcaSolution brute_force_cca(const Matrix& x, const Matrix& y, Index k) {
  const Index n = x.rows();
  const Index d_x = x.cols();
  const Index d_y = y.cols();
  if (y.rows() != n) {
    throw DimensionError("brute_force_cca: row counts differ");
  }
  if (n < 2 || n > 5000 || d_x < 1 || d_x > 30 || d_y < 1 || d_y > 30) {
    throw DimensionError("brute_force_cca: restricted to 2 <= N <= 5000 and "
                         "1 <= d <= 30");
  }
  if (k < 1 || k > std::min(d_x, d_y)) {
    throw DimensionError("brute_force_cca: k must be in [1, min(d_x, d_y)]");
  }

  // Covariances by explicit accumulation (1/N convention, centered).
  Vector mean_x = Vector::Zero(d_x);
  Vector mean_y = Vector::Zero(d_y);
  for (Index r = 0; r < n; ++r) {
    mean_x += x.row(r).transpose();
    mean_y += y.row(r).transpose();
  }
  mean_x /= static_cast<double>(n);
  mean_y /= static_cast<double>(n);

  Matrix c_x = Matrix::Zero(d_x, d_x);
  Matrix c_y = Matrix::Zero(d_y, d_y);
  Matrix c_xy = Matrix::Zero(d_x, d_y);
  for (Index r = 0; r < n; ++r) {
    const Vector xr = x.row(r).transpose() - mean_x;
    const Vector yr = y.row(r).transpose() - mean_y;
    c_x += xr * xr.transpose();
    c_y += yr * yr.transpose();
    c_xy += xr * yr.transpose();
  }
  c_x /= static_cast<double>(n);
  c_y /= static_cast<double>(n);
  c_xy /= static_cast<double>(n);

  const Matrix wx = jacobi_inverse_sqrt(c_x);
  const Matrix wy = jacobi_inverse_sqrt(c_y);
  const Matrix m = wx * c_xy * wy;

  // Symmetric embedding: eigenpairs of [[0, M], [M^T, 0]] carry the singular
  // triplets of M; the positive eigenvalues are the canonical correlations.
  const Index total = d_x + d_y;
  Matrix h = Matrix::Zero(total, total);
  h.topRightCorner(d_x, d_y) = m;
  h.bottomLeftCorner(d_y, d_x) = m.transpose();
  Vector lambda;
  Matrix vectors;
  jacobi_eigen(h, lambda, vectors);

  std::vector<Index> order(static_cast<std::size_t>(total));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&lambda](Index a, Index b) { return lambda(a) > lambda(b); });

  CcaSolution out;
  out.u_star.resize(d_x, k);
  out.v_star.resize(d_y, k);
  out.correlations.resize(k);
  const double sqrt2 = std::sqrt(2.0);
  for (Index j = 0; j < k; ++j) {
    const Index idx = order[static_cast<std::size_t>(j)];
    const Vector w = vectors.col(idx);
    out.correlations(j) = std::max(lambda(idx), 0.0);
    Vector phi = sqrt2 * w.head(d_x);
    Vector psi = sqrt2 * w.tail(d_y);
    Index arg_max = 0;
    phi.cwiseAbs().maxCoeff(&arg_max);
    if (phi(arg_max) < 0.0) {
      phi = -phi;
      psi = -psi;
    }
    out.u_star.col(j) = wx * phi;
    out.v_star.col(j) = wy * psi;
  }
  return out;
}

Vector principal_angles(const Matrix& a, const Matrix& b) {
  const Matrix qa = orthonormalize(a);
  const Matrix qb = orthonormalize(b);
  Eigen::JacobiSVD<Matrix> svd(qa.transpose() * qb);
  Vector cosines = svd.singularValues();
  Vector angles(cosines.size());
  for (Index i = 0; i < cosines.size(); ++i) {
    angles(i) = std::acos(std::clamp(cosines(i), -1.0, 1.0));
  }
  std::sort(angles.data(), angles.data() + angles.size());
  return angles;
}

DiagnosticsReport run_diagnostics(const RsgState& state,
                                  const CovarianceTriple& cov,
                                  const CcaSolution& exact,
                                  double max_update_norm) {
  const Matrix u = state.u();
  const Matrix v = state.v();
  DiagnosticsReport report;
  report.e = approximation_error_diagnostic(cov, u, v, exact).e;

  const Matrix core_x =
      state.u_tilde.transpose() * cov.c_x * state.u_tilde;
  const Matrix core_y =
      state.v_tilde.transpose() * cov.c_y * state.v_tilde;
  report.bound_x = pca_reconstruction_bound(
      cov.c_x, state.u_tilde * core_x * state.u_tilde.transpose(), state.k());
  report.bound_y = pca_reconstruction_bound(
      cov.c_y, state.v_tilde * core_y * state.v_tilde.transpose(), state.k());

  report.whitening_u = whitening_residual(u, cov.c_x);
  report.whitening_v = whitening_residual(v, cov.c_y);
  report.max_update_norm = max_update_norm;
  report.ball_radius = injectivity_grassmann;
  return report;
}

}  // namespace cca
