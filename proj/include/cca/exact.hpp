#pragma once

#include "cca/types.hpp"

namespace cca {

// Sample covariances of a paired dataset under the 1/N convention:
// c_x = x^T x / n, c_y = y^T y / n, c_xy = x^T y / n (after optional
// centering).  c_x and c_y are symmetrized on construction.
struct CovarianceTriple {
  Matrix c_x;   // d_x x d_x symmetric PSD
  Matrix c_y;   // d_y x d_y symmetric PSD
  Matrix c_xy;  // d_x x d_y
  Index n = 0;  // number of samples the estimate is based on
};

// Estimates the covariance triple from paired samples (rows).  With `center`
// set, each column's mean is subtracted first.  Normalization is 1/N, not
// 1/(N-1); cross-checks against external tools must account for this.
// Throws DataError for fewer than two rows, DimensionError for mismatched
// row counts.
CovarianceTriple estimate_covariances(const Matrix& x, const Matrix& y,
                                      bool center);

// Closed-form solution of the trace-maximization problem
//
//   max trace(U^T C_xy V)   s.t.  U^T C_x U = I,  V^T C_y V = I.
struct CcaSolution {
  Matrix u_star;        // d_x x k canonical directions for the first view
  Matrix v_star;        // d_y x k canonical directions for the second view
  Vector correlations;  // k canonical correlations, nonincreasing
};

// Inverse square root of a symmetric positive semi-definite matrix, computed
// by eigendecomposition.  Eigenvalues are shifted by `ridge` and floored at
// ridge + 1e-12 so near-singular inputs stay finite instead of producing NaN.
Matrix inverse_sqrt_spd(const Matrix& c, double ridge = 0.0);

// Whitened-SVD solver: U = C_x^{-1/2} Phi_k and V = C_y^{-1/2} Psi_k, where
// Phi_k, Psi_k are the top-k singular vector pairs of
// T = C_x^{-1/2} C_xy C_y^{-1/2} and the correlations are the top-k singular
// values of T.  Column signs follow a fixed convention (largest-magnitude
// entry of each left singular vector is positive) so results are
// reproducible.
CcaSolution exact_cca(const CovarianceTriple& cov, Index k, double ridge = 0.0);

// Sum of the canonical correlations between the column sets of two paired
// sample matrices (rows are samples).  Invariant to invertible linear
// recombination of either argument's columns.  A trace-scaled ridge
// (1e-6 * trace / dim) is applied to a projected covariance only when it is
// numerically singular, so well-conditioned inputs are solved exactly.
double tcc(const Matrix& a, const Matrix& b);

// tcc of the projected pair (X u, Y v), computed directly from the dataset
// covariances instead of materializing the projections of every sample.
double tcc_projected(const CovarianceTriple& cov, const Matrix& u,
                     const Matrix& v);

// Proportion of correlation captured by an estimated projection pair:
// tcc(estimate) / tcc(exact solution).  Reported as-is without clamping;
// rounding can push it slightly above 1.  Throws NumericalError when the
// oracle's own total correlation is numerically zero.
double pcc(const CovarianceTriple& cov, const Matrix& u_hat,
           const Matrix& v_hat, const CcaSolution& exact);

// Gap between the coupling objective of an estimate and of the exact
// solution: f_exact = trace(U*^T C_xy V*), f_tilde evaluated at the
// estimate, e = |f_exact - f_tilde|.
struct ObjectiveGap {
  double e = 0.0;
  double f_exact = 0.0;
  double f_tilde = 0.0;
};

ObjectiveGap approximation_error_diagnostic(const CovarianceTriple& cov,
                                            const Matrix& u_hat,
                                            const Matrix& v_hat,
                                            const CcaSolution& exact);

// Upper bound on the normalized reconstruction error ||X - X P||_F / sqrt(N)
// of a rank-k projector P, given the sample covariance c_full of the data
// and the covariance c_reduced of the projected data:
//
//   bound = min( sqrt(2k) ||D||_2 ,  2 ||D||_2^2 / (lambda_k - lambda_{k+1}) )
//
// with D = c_full - c_reduced and lambda_i the descending eigenvalues of
// c_full.  The second branch is dropped when the spectral gap is below
// tol_eigengap.
double pca_reconstruction_bound(const Matrix& c_full, const Matrix& c_reduced,
                                Index k);

}  // namespace cca
