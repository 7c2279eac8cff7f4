#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "cca/exact.hpp"
#include "cca/rng.hpp"
#include "cca/streaming.hpp"
#include "cca/types.hpp"
#include "test_support.hpp"

using cca::CcaSolution;
using cca::CovarianceTriple;
using cca::Index;
using cca::Matrix;
using cca::Vector;

namespace {

// Two-pass covariance computed with explicit loops; deliberately shares no
// code with the estimator under test.
Matrix loop_covariance(const Matrix& a, const Matrix& b) {
  const Index n = a.rows();
  Vector mean_a = Vector::Zero(a.cols());
  Vector mean_b = Vector::Zero(b.cols());
  for (Index r = 0; r < n; ++r) {
    mean_a += a.row(r).transpose();
    mean_b += b.row(r).transpose();
  }
  mean_a /= static_cast<double>(n);
  mean_b /= static_cast<double>(n);
  Matrix c = Matrix::Zero(a.cols(), b.cols());
  for (Index r = 0; r < n; ++r) {
    c += (a.row(r).transpose() - mean_a) * (b.row(r) - mean_b.transpose());
  }
  return c / static_cast<double>(n);
}

CovarianceTriple identity_coupling(double rho1, double rho2) {
  CovarianceTriple cov;
  cov.c_x = Matrix::Identity(2, 2);
  cov.c_y = Matrix::Identity(2, 2);
  cov.c_xy = Matrix::Zero(2, 2);
  cov.c_xy(0, 0) = rho1;
  cov.c_xy(1, 1) = rho2;
  cov.n = 1000;
  return cov;
}

}  // namespace

TEST_CASE("covariance of a two-point symmetric cloud") {
  Matrix x(2, 2);
  x << 1.0, 0.0, -1.0, 0.0;
  const CovarianceTriple cov = cca::estimate_covariances(x, x, true);
  Matrix want(2, 2);
  want << 1.0, 0.0, 0.0, 0.0;
  CHECK((cov.c_x - want).norm() == 0.0);
  CHECK((cov.c_xy - want).norm() == 0.0);
  CHECK(cov.n == 2);
}

TEST_CASE("covariance estimation matches an explicit two-pass oracle") {
  cca::NormalSampler rng(31);
  const Matrix x = rng.matrix(40, 5);
  const Matrix y = rng.matrix(40, 3);
  const CovarianceTriple cov = cca::estimate_covariances(x, y, true);
  CHECK((cov.c_x - loop_covariance(x, x)).norm() <= 1e-12);
  CHECK((cov.c_y - loop_covariance(y, y)).norm() <= 1e-12);
  CHECK((cov.c_xy - loop_covariance(x, y)).norm() <= 1e-12);
  CHECK((cov.c_x - cov.c_x.transpose()).norm() == 0.0);
}

TEST_CASE("covariance estimation rejects bad sample sets") {
  cca::NormalSampler rng(32);
  CHECK_THROWS_AS(cca::estimate_covariances(rng.matrix(3, 2), rng.matrix(4, 2),
                                            true),
                  cca::DimensionError);
  CHECK_THROWS_AS(cca::estimate_covariances(rng.matrix(1, 2), rng.matrix(1, 2),
                                            true),
                  cca::DataError);
}

TEST_CASE("inverse square root whitens a random SPD matrix") {
  cca::NormalSampler rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix c = test_support::random_spd(rng, 5, 0.1);
    const Matrix m = cca::inverse_sqrt_spd(c);
    CHECK((m * c * m - Matrix::Identity(5, 5)).norm() <= 1e-10);
    CHECK((m - m.transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("inverse square root survives singular input") {
  Matrix c = Matrix::Zero(3, 3);
  c(0, 0) = 4.0;  // rank one
  const Matrix m = cca::inverse_sqrt_spd(c, 1e-6);
  CHECK(m.allFinite());
  CHECK(m(0, 0) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("diagonal coupling with identity covariances solves by hand") {
  const CovarianceTriple cov = identity_coupling(0.9, 0.3);
  const CcaSolution sol = cca::exact_cca(cov, 2);
  CHECK(sol.correlations(0) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(sol.correlations(1) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK((sol.u_star - Matrix::Identity(2, 2)).norm() <= 1e-12);
  CHECK((sol.v_star - Matrix::Identity(2, 2)).norm() <= 1e-12);
}

TEST_CASE("identical views have unit canonical correlations") {
  cca::NormalSampler rng(34);
  const Matrix x = rng.matrix(500, 5);
  const CovarianceTriple cov = cca::estimate_covariances(x, x, true);
  const CcaSolution sol = cca::exact_cca(cov, 3);
  for (Index i = 0; i < 3; ++i) {
    CHECK(sol.correlations(i) == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("independent views have near-zero canonical correlations") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cca::NormalSampler rng(seed);
    const Matrix x = rng.matrix(5000, 4);
    const Matrix y = rng.matrix(5000, 4);
    const CovarianceTriple cov = cca::estimate_covariances(x, y, true);
    const CcaSolution sol = cca::exact_cca(cov, 4);
    CHECK(sol.correlations(0) <= 0.1);
  }
}

TEST_CASE("solution satisfies the whitening constraints") {
  cca::NormalSampler rng(35);
  cca::SyntheticSpec spec;
  spec.d_x = 8;
  spec.d_y = 7;
  spec.latent_dim = 3;
  spec.lambda = Vector(3);
  spec.lambda << 4.0, 3.0, 2.0;
  spec.noise_sigma = 0.5;
  spec.seed = 35;
  cca::SyntheticSource source(spec);
  Matrix x, y;
  source.next_block(3000, x, y);
  const CovarianceTriple cov = cca::estimate_covariances(x, y, true);
  const CcaSolution sol = cca::exact_cca(cov, 3);
  CHECK((sol.u_star.transpose() * cov.c_x * sol.u_star -
         Matrix::Identity(3, 3))
            .norm() <= 1e-10);
  CHECK((sol.v_star.transpose() * cov.c_y * sol.v_star -
         Matrix::Identity(3, 3))
            .norm() <= 1e-10);
  CHECK(std::is_sorted(sol.correlations.data(),
                       sol.correlations.data() + 3,
                       std::greater<double>()));
}

TEST_CASE("exact solver validates k") {
  const CovarianceTriple cov = identity_coupling(0.9, 0.3);
  CHECK_THROWS_AS(cca::exact_cca(cov, 3), cca::DimensionError);
  CHECK_THROWS_AS(cca::exact_cca(cov, 0), cca::DimensionError);
}

TEST_CASE("total correlation of a dataset with itself counts its columns") {
  cca::NormalSampler rng(36);
  const Matrix a = rng.matrix(400, 3);
  CHECK(cca::tcc(a, a) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("total correlation is invariant to invertible recombination") {
  cca::NormalSampler rng(37);
  const Matrix a = rng.matrix(600, 3);
  const Matrix b = rng.matrix(600, 3);
  Matrix r = rng.matrix(3, 3);
  r += 3.0 * Matrix::Identity(3, 3);  // comfortably invertible
  const double base = cca::tcc(a, b);
  CHECK(cca::tcc((a * r).eval(), b) == doctest::Approx(base).epsilon(1e-6));
}

TEST_CASE("total correlation of independent noise is small") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cca::NormalSampler rng(seed + 100);
    const Matrix a = rng.matrix(5000, 2);
    const Matrix b = rng.matrix(5000, 2);
    CHECK(cca::tcc(a, b) <= 0.1);
  }
}

TEST_CASE("projected total correlation matches the correlation sum") {
  cca::NormalSampler rng(38);
  cca::SyntheticSpec spec;
  spec.d_x = 6;
  spec.d_y = 6;
  spec.latent_dim = 2;
  spec.lambda = Vector(2);
  spec.lambda << 3.0, 2.0;
  spec.noise_sigma = 0.4;
  spec.seed = 38;
  cca::SyntheticSource source(spec);
  Matrix x, y;
  source.next_block(2000, x, y);
  const CovarianceTriple cov = cca::estimate_covariances(x, y, true);
  const CcaSolution sol = cca::exact_cca(cov, 2);
  CHECK(cca::tcc_projected(cov, sol.u_star, sol.v_star) ==
        doctest::Approx(sol.correlations.sum()).epsilon(1e-8));
}

TEST_CASE("pcc is one at the exact solution and small off-span") {
  const CovarianceTriple cov = identity_coupling(0.9, 0.3);
  const CcaSolution sol = cca::exact_cca(cov, 1);
  CHECK(cca::pcc(cov, sol.u_star, sol.v_star, sol) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // Project onto the weakly coupled directions instead.
  Matrix u(2, 1), v(2, 1);
  u << 0.0, 1.0;
  v << 0.0, 1.0;
  CHECK(cca::pcc(cov, u, v, sol) == doctest::Approx(0.3 / 0.9).epsilon(1e-10));
}

TEST_CASE("pcc refuses a degenerate reference") {
  CovarianceTriple cov = identity_coupling(0.0, 0.0);
  const CcaSolution sol = cca::exact_cca(cov, 1);
  Matrix u(2, 1), v(2, 1);
  u << 1.0, 0.0;
  v << 1.0, 0.0;
  CHECK_THROWS_AS(cca::pcc(cov, u, v, sol), cca::NumericalError);
}

TEST_CASE("reconstruction bound is zero for a perfect reconstruction") {
  cca::NormalSampler rng(39);
  const Matrix c = test_support::random_spd(rng, 4, 0.2);
  CHECK(cca::pca_reconstruction_bound(c, c, 2) == 0.0);
}

TEST_CASE("reconstruction bound evaluates the printed formula by hand") {
  Matrix c = Matrix::Zero(3, 3);
  c(0, 0) = 4.0;
  c(1, 1) = 1.0;
  c(2, 2) = 0.25;
  Matrix c_tilde = Matrix::Zero(3, 3);
  c_tilde(0, 0) = 4.0;  // top-1 reconstruction
  // Delta = diag(0, 1, 0.25): spectral norm 1, eigengap 4 - 1 = 3,
  // min(sqrt(2)*1, 2*1/3) = 2/3.
  CHECK(cca::pca_reconstruction_bound(c, c_tilde, 1) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("reconstruction bound drops the gap branch when the gap closes") {
  const Matrix c = Matrix::Identity(3, 3);  // eigengap zero
  Matrix c_tilde = c;
  c_tilde(2, 2) = 0.5;  // spectral norm of Delta is 0.5
  const double k = 1.0;
  CHECK(cca::pca_reconstruction_bound(c, c_tilde, 1) ==
        doctest::Approx(std::sqrt(2.0 * k) * 0.5).epsilon(1e-12));
}

TEST_CASE("empirical excess reconstruction risk stays under the bound") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cca::SyntheticSpec spec;
    spec.d_x = 15;
    spec.d_y = 15;
    spec.latent_dim = 3;
    spec.lambda = Vector(3);
    spec.lambda << 4.0, 3.0, 2.0;
    spec.noise_sigma = 0.5;
    spec.seed = seed;
    cca::SyntheticSource source(spec);
    Matrix x, y;
    source.next_block(2000, x, y);
    const Matrix c_pop = source.population_c_x();
    cca::center_columns(x);
    const Matrix c_hat = cca::sample_covariance(x, x);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(c_hat);
    const Index d = 15;
    const Index k = 3;
    const Matrix top = eig.eigenvectors().rightCols(k);
    const Matrix p_hat = top * top.transpose();

    Eigen::SelfAdjointEigenSolver<Matrix> pop(c_pop);
    const double optimal_risk = pop.eigenvalues().head(d - k).sum();
    const double risk = ((Matrix::Identity(d, d) - p_hat) * c_pop).trace();
    const double excess = risk - optimal_risk;

    const double bound = cca::pca_reconstruction_bound(c_pop, c_hat, k);
    CHECK(excess >= -1e-12);
    CHECK(excess <= bound);
  }
}

TEST_CASE("objective gap vanishes at the exact solution") {
  cca::NormalSampler rng(40);
  cca::SyntheticSpec spec;
  spec.d_x = 7;
  spec.d_y = 7;
  spec.latent_dim = 2;
  spec.lambda = Vector(2);
  spec.lambda << 3.0, 2.0;
  spec.noise_sigma = 0.4;
  spec.seed = 40;
  cca::SyntheticSource source(spec);
  Matrix x, y;
  source.next_block(2000, x, y);
  const CovarianceTriple cov = cca::estimate_covariances(x, y, true);
  const CcaSolution sol = cca::exact_cca(cov, 2);
  const cca::ObjectiveGap gap =
      cca::approximation_error_diagnostic(cov, sol.u_star, sol.v_star, sol);
  CHECK(gap.e <= 1e-10);
  CHECK(gap.f_exact == doctest::Approx(sol.correlations.sum()).epsilon(1e-10));
  CHECK(gap.e == std::abs(gap.f_exact - gap.f_tilde));
}
