#include "cca/matrix_functions.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

namespace cca {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

void require_small_square(const Matrix& A, const char* fn) {
  if (A.rows() != A.cols()) {
    throw DimensionError(std::string(fn) + ": matrix must be square, got " +
                         std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
  if (A.rows() == 0 || A.rows() > 64) {
    throw DimensionError(std::string(fn) + ": supported sizes are 1..64, got " +
                         std::to_string(A.rows()));
  }
}

// Upper-triangular principal square root (Bjorck-Hammarling recurrence).
ComplexMatrix triangular_sqrt(const ComplexMatrix& T) {
  const Index n = T.rows();
  ComplexMatrix R = ComplexMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    R(i, i) = std::sqrt(T(i, i));
  }
  for (Index gap = 1; gap < n; ++gap) {
    for (Index i = 0; i + gap < n; ++i) {
      const Index j = i + gap;
      std::complex<double> acc = T(i, j);
      for (Index l = i + 1; l < j; ++l) {
        acc -= R(i, l) * R(l, j);
      }
      const std::complex<double> denom = R(i, i) + R(j, j);
      if (std::abs(denom) < 1e-300) {
        throw NumericalError("matrix_log_small: square-root recurrence broke down "
                             "(eigenvalues straddle the branch cut)");
      }
      R(i, j) = acc / denom;
    }
  }
  return R;
}

}  // namespace

Matrix matrix_exp_small(const Matrix& A) {
  require_small_square(A, "matrix_exp_small");
  const Index n = A.rows();

  // Pade-13 coefficients (numerator b1,b3,... / denominator shares them with
  // alternating signs); theta_13 is the double-precision scaling threshold.
  static const double b[14] = {
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
      1187353796428800.0,  129060195264000.0,   10559470521600.0,
      670442572800.0,      33522128640.0,       1323241920.0,
      40840800.0,          960960.0,            16380.0,
      182.0,               1.0};
  const double theta13 = 5.371920351148152;

  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  }
  const Matrix As = A / std::ldexp(1.0, squarings);

  const Matrix I = Matrix::Identity(n, n);
  const Matrix A2 = As * As;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A2 * A4;

  const Matrix U = As * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) +
                         b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  const Matrix V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) +
                   b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;

  Matrix F = (V - U).partialPivLu().solve(V + U);
  for (int s = 0; s < squarings; ++s) {
    F = F * F;
  }
  return F;
}

Matrix matrix_log_small(const Matrix& A) {
  require_small_square(A, "matrix_log_small");
  const Index n = A.rows();

  Eigen::ComplexSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success) {
    throw NumericalError("matrix_log_small: Schur factorization failed");
  }
  ComplexMatrix T = schur.matrixT();
  const ComplexMatrix Q = schur.matrixU();

  for (Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = T(i, i);
    if (std::abs(lambda) < 1e-300) {
      throw NumericalError("matrix_log_small: matrix is singular");
    }
    if (lambda.real() < 0.0 &&
        std::abs(lambda.imag()) <= tol_angle * std::abs(lambda)) {
      throw NumericalError("matrix_log_small: eigenvalue on the negative real "
                           "axis; principal log undefined");
    }
  }

  // Inverse scaling-squaring: take triangular square roots until T is close
  // enough to the identity for the log series to converge fast.
  const ComplexMatrix Ic = ComplexMatrix::Identity(n, n);
  int sqrt_count = 0;
  while ((T - Ic).norm() > 0.25) {
    if (sqrt_count >= 64) {
      throw NumericalError("matrix_log_small: inverse scaling did not converge");
    }
    T = triangular_sqrt(T);
    ++sqrt_count;
  }

  // log(I + X) = sum_{m>=1} (-1)^{m+1} X^m / m, with ||X|| <= 0.25.
  const ComplexMatrix X = T - Ic;
  ComplexMatrix term = X;
  ComplexMatrix logT = X;
  for (int m = 2; m <= 40; ++m) {
    term = term * X;
    const ComplexMatrix contrib = term / static_cast<double>(m);
    logT += (m % 2 == 0) ? ComplexMatrix(-contrib) : contrib;
    if (term.norm() / m < 1e-18) {
      break;
    }
  }
  logT *= std::ldexp(1.0, sqrt_count);

  const ComplexMatrix L = Q * logT * Q.adjoint();
  const double imag_norm = L.imag().norm();
  if (imag_norm > 1e-8 * std::max(1.0, L.real().norm())) {
    throw NumericalError("matrix_log_small: result has a non-negligible "
                         "imaginary part; input too close to the branch cut");
  }
  return L.real();
}

}  // namespace cca
