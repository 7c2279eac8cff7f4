#pragma once

#include "cca/types.hpp"

namespace cca {

// Geometry kernels for the three matrix manifolds used by the optimizer:
//
//   St(k, d)  - orthonormal d-by-k frames (X^T X = I)
//   Gr(k, d)  - k-dimensional subspaces of R^d, represented by frames
//   SO(k)     - rotations (Q^T Q = I, det Q = +1)
//
// Tangent-vector conventions: Stiefel and Grassmann tangents are ambient
// d-by-k matrices at the given base frame; rotation tangents are ambient
// k-by-k matrices of the form R * W with W skew-symmetric.

// Step norms at or beyond these radii are outside the region where the
// log maps below are guaranteed to invert the corresponding exp maps.
inline constexpr double injectivity_stiefel = 1.1107207345395915;   // pi / (2 sqrt 2)
inline constexpr double injectivity_grassmann = 1.1107207345395915; // pi / (2 sqrt 2)
inline constexpr double injectivity_rotation = 1.5707963267948966;  // pi / 2

// Nearest orthonormal basis of the column span of X (d >= k), computed by
// Householder QR with the sign convention that R has a nonnegative diagonal,
// so the result is deterministic across backends.  Throws NumericalError if
// X is numerically rank-deficient.
Matrix orthonormalize(const Matrix& X);

// Stiefel retraction: the polar factor of X + V.  Second-order retraction;
// exact geodesics are not required by the optimizer.  Throws NumericalError
// if X + V is numerically rank-deficient (degenerate retraction).
Matrix st_exp(const Matrix& X, const Matrix& V);

// First-order inverse of st_exp: the tangent projection of Y - X.
// Exact only in the limit Y -> X; the pair (st_exp, st_log) agrees to third
// order along horizontal directions.
Matrix st_log(const Matrix& X, const Matrix& Y);

// Grassmann retraction: the polar factor of X + V, read as a representative
// of the retracted subspace.  V must be horizontal at X (X^T V = 0);
// otherwise throws NumericalError.  Together with gr_log this forms a
// first-order-consistent pair with cubic roundtrip error.
Matrix gr_exp(const Matrix& X, const Matrix& V);

// Grassmann logarithm: the horizontal tangent at X whose geodesic reaches
// span(Y).  Throws NumericalError when the subspaces contain orthogonal
// directions (principal angle pi/2), where the log is undefined.
Matrix gr_log(const Matrix& X, const Matrix& Y);

// Rotation-group exponential: R * expm(R^T V).  V must be an ambient tangent
// at R, i.e. R^T V skew-symmetric; otherwise throws NumericalError.
Matrix so_exp(const Matrix& R, const Matrix& V);

// Rotation-group logarithm: R * logm(R^T P), skew-symmetrized against
// roundoff.  Throws NumericalError if R^T P has an eigenvalue on the branch
// cut (rotation by pi in some plane).
Matrix so_log(const Matrix& R, const Matrix& P);

// Tangent projections used on Euclidean gradients before a manifold step.
// Two frame/rotation variants exist: the standard forms the update rules are
// defined with, and the orthogonal (Euclidean) tangent projections available
// for ablation.  Only the orthogonal forms are idempotent.
Matrix project_stiefel(const Matrix& X, const Matrix& G);  // G - X G^T X
Matrix project_stiefel_orthogonal(const Matrix& X, const Matrix& G);  // G - X sym(X^T G)
Matrix project_rotation(const Matrix& G);             // G - G^T
Matrix project_rotation_orthogonal(const Matrix& G);  // (G - G^T) / 2
Matrix project_upper(const Matrix& G);                // upper triangle of G

}  // namespace cca
