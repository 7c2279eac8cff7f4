#pragma once

#include "cca/types.hpp"

namespace cca {

// Matrix exponential of a small (n <= 64) square matrix via Pade-13
// approximation with scaling and squaring.  Intended for the k-by-k
// skew-symmetric generators that arise in rotation updates, but valid for
// any real square matrix in that size range.
Matrix matrix_exp_small(const Matrix& A);

// Principal matrix logarithm of a small (n <= 64) square matrix via complex
// Schur factorization and inverse scaling-squaring (repeated triangular
// square roots, then a truncated log(I + X) series).  Throws NumericalError
// if any eigenvalue lies on the closed negative real axis, where the
// principal log is undefined, or if the input is singular.
Matrix matrix_log_small(const Matrix& A);

}  // namespace cca
