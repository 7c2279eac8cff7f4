#include "cca/exact.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cca {

namespace {

void require_square(const Matrix& c, const char* name) {
  if (c.rows() != c.cols() || c.rows() < 1) {
    throw DimensionError(std::string(name) +
                         " must be square and nonempty, got " +
                         std::to_string(c.rows()) + "x" +
                         std::to_string(c.cols()));
  }
}

void require_triple_shapes(const CovarianceTriple& cov, const char* fn) {
  require_square(cov.c_x, "c_x");
  require_square(cov.c_y, "c_y");
  if (cov.c_xy.rows() != cov.c_x.rows() || cov.c_xy.cols() != cov.c_y.rows()) {
    throw DimensionError(std::string(fn) + ": c_xy must be " +
                         std::to_string(cov.c_x.rows()) + "x" +
                         std::to_string(cov.c_y.rows()) + ", got " +
                         std::to_string(cov.c_xy.rows()) + "x" +
                         std::to_string(cov.c_xy.cols()));
  }
}

// Ridge applied to a projected covariance before whitening, active only when
// the matrix is numerically singular.  Trace-scaled so the behaviour does not
// depend on the data's units.
double singular_guard_ridge(const Matrix& c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.transpose()),
                                           Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw NumericalError("singular covariance guard: eigendecomposition failed");
  }
  const double lambda_max = es.eigenvalues().maxCoeff();
  const double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_max <= 0.0 || lambda_min <= 1e-10 * lambda_max) {
    return 1e-6 * std::max(c.trace(), 0.0) / static_cast<double>(c.rows()) +
           1e-12;
  }
  return 0.0;
}

double sum_of_canonical_correlations(const Matrix& a, const Matrix& b,
                                     const Matrix& m) {
  const Matrix core =
      inverse_sqrt_spd(a, singular_guard_ridge(a)) * m *
      inverse_sqrt_spd(b, singular_guard_ridge(b));
  Eigen::JacobiSVD<Matrix> svd(core);
  return svd.singularValues().sum();
}

}  // namespace

CovarianceTriple estimate_covariances(const Matrix& x, const Matrix& y,
                                      bool center) {
  if (x.rows() != y.rows()) {
    throw DimensionError("estimate_covariances: row counts differ, " +
                         std::to_string(x.rows()) + " vs " +
                         std::to_string(y.rows()));
  }
  const Index n = x.rows();
  if (n < 2) {
    throw DataError("estimate_covariances: need at least 2 samples, got " +
                    std::to_string(n));
  }

  Matrix xc = x;
  Matrix yc = y;
  if (center) {
    xc.rowwise() -= x.colwise().mean();
    yc.rowwise() -= y.colwise().mean();
  }

  CovarianceTriple cov;
  const double inv_n = 1.0 / static_cast<double>(n);
  cov.c_x = (xc.transpose() * xc) * inv_n;
  cov.c_y = (yc.transpose() * yc) * inv_n;
  cov.c_xy = (xc.transpose() * yc) * inv_n;
  cov.c_x = 0.5 * (cov.c_x + cov.c_x.transpose()).eval();
  cov.c_y = 0.5 * (cov.c_y + cov.c_y.transpose()).eval();
  cov.n = n;
  return cov;
}

Matrix inverse_sqrt_spd(const Matrix& c, double ridge) {
  require_square(c, "covariance");
  if (ridge < 0.0) {
    throw NumericalError("inverse_sqrt_spd: ridge must be nonnegative");
  }
  const Matrix sym = 0.5 * (c + c.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericalError("inverse_sqrt_spd: eigendecomposition failed");
  }
  Vector lambda = es.eigenvalues();
  const double floor_value = ridge + 1e-12;
  for (Index i = 0; i < lambda.size(); ++i) {
    lambda(i) = std::max(lambda(i) + ridge, floor_value);
  }
  const Vector inv_sqrt = lambda.array().rsqrt();
  return es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

CcaSolution exact_cca(const CovarianceTriple& cov, Index k, double ridge) {
  require_triple_shapes(cov, "exact_cca");
  const Index d_x = cov.c_x.rows();
  const Index d_y = cov.c_y.rows();
  if (k < 1 || k > std::min(d_x, d_y)) {
    throw DimensionError("exact_cca: k must be in [1, min(d_x, d_y)], got " +
                         std::to_string(k));
  }

  const Matrix wx = inverse_sqrt_spd(cov.c_x, ridge);
  const Matrix wy = inverse_sqrt_spd(cov.c_y, ridge);
  const Matrix t = wx * cov.c_xy * wy;

  Eigen::JacobiSVD<Matrix> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix phi = svd.matrixU().leftCols(k);
  Matrix psi = svd.matrixV().leftCols(k);

  // Deterministic sign convention: the largest-magnitude entry of each left
  // singular vector is made positive; the paired right vector flips with it.
  for (Index j = 0; j < k; ++j) {
    Index arg_max = 0;
    phi.col(j).cwiseAbs().maxCoeff(&arg_max);
    if (phi(arg_max, j) < 0.0) {
      phi.col(j) = -phi.col(j);
      psi.col(j) = -psi.col(j);
    }
  }

  CcaSolution out;
  out.u_star = wx * phi;
  out.v_star = wy * psi;
  out.correlations = svd.singularValues().head(k);
  return out;
}

double tcc(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("tcc: row counts differ");
  }
  if (a.rows() <= std::max(a.cols(), b.cols())) {
    throw DimensionError("tcc: need more samples than projected dimensions");
  }
  const CovarianceTriple cov = estimate_covariances(a, b, /*center=*/true);
  return sum_of_canonical_correlations(cov.c_x, cov.c_y, cov.c_xy);
}

double tcc_projected(const CovarianceTriple& cov, const Matrix& u,
                     const Matrix& v) {
  require_triple_shapes(cov, "tcc_projected");
  if (u.cols() != v.cols()) {
    throw DimensionError("tcc_projected: u and v must have the same number of "
                         "columns");
  }
  if (u.rows() != cov.c_x.rows() || v.rows() != cov.c_y.rows()) {
    throw DimensionError("tcc_projected: projection shapes do not match the "
                         "covariances");
  }
  const Matrix a = u.transpose() * cov.c_x * u;
  const Matrix b = v.transpose() * cov.c_y * v;
  const Matrix m = u.transpose() * cov.c_xy * v;
  return sum_of_canonical_correlations(a, b, m);
}

double pcc(const CovarianceTriple& cov, const Matrix& u_hat,
           const Matrix& v_hat, const CcaSolution& exact) {
  const double reference = tcc_projected(cov, exact.u_star, exact.v_star);
  if (!(reference > 1e-12)) {
    throw NumericalError("pcc: degenerate oracle, exact total correlation is "
                         "numerically zero");
  }
  return tcc_projected(cov, u_hat, v_hat) / reference;
}

ObjectiveGap approximation_error_diagnostic(const CovarianceTriple& cov,
                                            const Matrix& u_hat,
                                            const Matrix& v_hat,
                                            const CcaSolution& exact) {
  require_triple_shapes(cov, "approximation_error_diagnostic");
  ObjectiveGap gap;
  gap.f_exact = (exact.u_star.transpose() * cov.c_xy * exact.v_star).trace();
  gap.f_tilde = (u_hat.transpose() * cov.c_xy * v_hat).trace();
  gap.e = std::abs(gap.f_exact - gap.f_tilde);
  return gap;
}

double pca_reconstruction_bound(const Matrix& c_full, const Matrix& c_reduced,
                                Index k) {
  require_square(c_full, "c_full");
  if (c_reduced.rows() != c_full.rows() || c_reduced.cols() != c_full.cols()) {
    throw DimensionError("pca_reconstruction_bound: covariance shapes differ");
  }
  const Index d = c_full.rows();
  if (k < 1 || k > d) {
    throw DimensionError("pca_reconstruction_bound: k must be in [1, d]");
  }

  const Matrix delta = 0.5 * ((c_full - c_reduced) + (c_full - c_reduced).transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> delta_es(delta);
  if (delta_es.info() != Eigen::Success) {
    throw NumericalError("pca_reconstruction_bound: eigendecomposition failed");
  }
  const double spectral = delta_es.eigenvalues().cwiseAbs().maxCoeff();
  if (spectral == 0.0) {
    return 0.0;
  }

  const double first_branch = std::sqrt(2.0 * static_cast<double>(k)) * spectral;
  double second_branch = std::numeric_limits<double>::infinity();
  if (k < d) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c_full + c_full.transpose()));
    if (es.info() != Eigen::Success) {
      throw NumericalError("pca_reconstruction_bound: eigendecomposition failed");
    }
    // SelfAdjointEigenSolver sorts ascending; index from the top.
    const Vector lambda = es.eigenvalues();
    const double gap = lambda(d - k) - lambda(d - k - 1);
    if (gap > tol_eigengap) {
      second_branch = 2.0 * spectral * spectral / gap;
    }
  }
  return std::min(first_branch, second_branch);
}

}  // namespace cca
