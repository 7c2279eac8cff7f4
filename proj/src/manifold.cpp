#include "cca/manifold.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <string>

#include "cca/matrix_functions.hpp"

namespace cca {

namespace {

void require_frame(const Matrix& X, const char* fn) {
  if (X.rows() < X.cols() || X.cols() < 1) {
    throw DimensionError(std::string(fn) + ": expected a tall d x k matrix with "
                         "d >= k >= 1, got " + std::to_string(X.rows()) + "x" +
                         std::to_string(X.cols()));
  }
}

void require_same_shape(const Matrix& A, const Matrix& B, const char* fn) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw DimensionError(std::string(fn) + ": shape mismatch, " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()) +
                         " vs " + std::to_string(B.rows()) + "x" +
                         std::to_string(B.cols()));
  }
}

void require_square_pair(const Matrix& A, const Matrix& B, const char* fn) {
  require_same_shape(A, B, fn);
  if (A.rows() != A.cols()) {
    throw DimensionError(std::string(fn) + ": expected square matrices, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
}

}  // namespace

Matrix orthonormalize(const Matrix& X) {
  require_frame(X, "orthonormalize");
  const Index d = X.rows();
  const Index k = X.cols();

  Eigen::HouseholderQR<Matrix> qr(X);
  Matrix Q = qr.householderQ() * Matrix::Identity(d, k);
  const Matrix R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  // Fix the QR sign ambiguity so the basis is deterministic: make the
  // diagonal of R nonnegative.
  for (Index j = 0; j < k; ++j) {
    if (R(j, j) < 0.0) {
      Q.col(j) = -Q.col(j);
    }
  }

  // The singular values of R are those of X; reject rank deficiency.
  Eigen::JacobiSVD<Matrix> svd(R);
  const double sigma_max = svd.singularValues()(0);
  const double sigma_min = svd.singularValues()(k - 1);
  if (sigma_max <= 0.0 || sigma_min <= tol_rank_rel * sigma_max) {
    throw NumericalError("orthonormalize: input is numerically rank-deficient");
  }
  return Q;
}

Matrix st_exp(const Matrix& X, const Matrix& V) {
  require_frame(X, "st_exp");
  require_same_shape(X, V, "st_exp");

  const Matrix B = X + V;
  Eigen::JacobiSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Index k = X.cols();
  const double sigma_max = svd.singularValues()(0);
  const double sigma_min = svd.singularValues()(k - 1);
  if (sigma_max <= 0.0 || sigma_min <= tol_rank_rel * sigma_max) {
    throw NumericalError("st_exp: retraction is degenerate (X + V is "
                         "numerically rank-deficient)");
  }
  return svd.matrixU() * svd.matrixV().transpose();
}

Matrix st_log(const Matrix& X, const Matrix& Y) {
  require_frame(X, "st_log");
  require_same_shape(X, Y, "st_log");
  return project_stiefel(X, Y - X);
}

Matrix gr_exp(const Matrix& X, const Matrix& V) {
  require_frame(X, "gr_exp");
  require_same_shape(X, V, "gr_exp");

  const double vnorm = V.norm();
  if ((X.transpose() * V).norm() > tol_tangent * std::max(1.0, vnorm)) {
    throw NumericalError("gr_exp: tangent is not horizontal (X^T V != 0)");
  }
  // Same SVD retraction as the Stiefel map, applied to a horizontal tangent;
  // the result is read as a representative of the retracted subspace.
  return st_exp(X, V);
}

Matrix gr_log(const Matrix& X, const Matrix& Y) {
  require_frame(X, "gr_log");
  require_same_shape(X, Y, "gr_log");
  const Index k = X.cols();

  const Matrix M = X.transpose() * Y;
  // Screen sigma_min(M) > 1e-12 through the eigenvalues of M^T M first: they
  // carry an absolute error of order eps * lambda_max, so a smallest
  // eigenvalue clearing the threshold by that margin is a rigorous
  // certificate.  Only near-threshold or degenerate inputs fall through to
  // the exact (and much slower) SVD, which keeps the authoritative verdict.
  const double eps = std::numeric_limits<double>::epsilon();
  Eigen::SelfAdjointEigenSolver<Matrix> screen(Matrix(M.transpose() * M),
                                               Eigen::EigenvaluesOnly);
  const bool surely_above =
      screen.info() == Eigen::Success &&
      screen.eigenvalues()(0) >
          1e-12 + 128.0 * eps * std::max(screen.eigenvalues()(k - 1), 1.0);
  if (!surely_above) {
    Eigen::JacobiSVD<Matrix> msvd(M);
    const double sigma_min = msvd.singularValues()(k - 1);
    if (sigma_min <= 1e-12) {
      throw NumericalError("gr_log: subspaces contain mutually orthogonal "
                           "directions; logarithm undefined");
    }
  }

  // H = Y M^{-1} - X is horizontal at X; its SVD gives the principal angles.
  // M is k x k and certified well away from singular, so the explicit
  // inverse is safe and turns the solve into one tall product.
  Matrix H = Y * M.partialPivLu().inverse();
  H -= X;

  // With H = U tan(Theta) V^T, the log is U atan(tan Theta) V^T, which equals
  // H f(H^T H) for f(w) = atan(sqrt w)/sqrt w.  Evaluating f through the
  // eigendecomposition of the small Gram matrix costs three d*k^2 products
  // instead of a tall QR plus an SVD.  f is analytic with f(0) = 1 and a
  // bounded derivative, so clustered or tiny eigenvalues cannot amplify error
  // the way they would if we needed the eigenvectors individually.
  const Matrix W = H.transpose() * H;
  Eigen::SelfAdjointEigenSolver<Matrix> es(W);
  Vector f(k);
  for (Index i = 0; i < k; ++i) {
    const double t = std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    f(i) = t < 1e-8 ? 1.0 - t * t / 3.0 : std::atan(t) / t;
  }
  return H *
         (es.eigenvectors() * f.asDiagonal() * es.eigenvectors().transpose());
}

Matrix so_exp(const Matrix& R, const Matrix& V) {
  require_square_pair(R, V, "so_exp");

  const Matrix S = R.transpose() * V;
  if ((S + S.transpose()).norm() > tol_tangent * std::max(1.0, S.norm())) {
    throw NumericalError("so_exp: tangent is invalid (R^T V is not "
                         "skew-symmetric)");
  }
  const Matrix W = 0.5 * (S - S.transpose());
  return R * matrix_exp_small(W);
}

Matrix so_log(const Matrix& R, const Matrix& P) {
  require_square_pair(R, P, "so_log");
  const Matrix W = matrix_log_small(R.transpose() * P);
  return R * (0.5 * (W - W.transpose()));
}

Matrix project_stiefel(const Matrix& X, const Matrix& G) {
  require_same_shape(X, G, "project_stiefel");
  // Associate as X (G^T X) so the intermediate stays k x k rather than d x d.
  return G - X * (G.transpose() * X);
}

Matrix project_stiefel_orthogonal(const Matrix& X, const Matrix& G) {
  require_same_shape(X, G, "project_stiefel_orthogonal");
  const Matrix XtG = X.transpose() * G;
  return G - X * (0.5 * (XtG + XtG.transpose()));
}

Matrix project_rotation(const Matrix& G) {
  if (G.rows() != G.cols()) {
    throw DimensionError("project_rotation: expected a square matrix");
  }
  return G - G.transpose();
}

Matrix project_rotation_orthogonal(const Matrix& G) {
  if (G.rows() != G.cols()) {
    throw DimensionError("project_rotation_orthogonal: expected a square matrix");
  }
  return 0.5 * (G - G.transpose());
}

Matrix project_upper(const Matrix& G) {
  if (G.rows() != G.cols()) {
    throw DimensionError("project_upper: expected a square matrix");
  }
  return G.triangularView<Eigen::Upper>();
}

}  // namespace cca
