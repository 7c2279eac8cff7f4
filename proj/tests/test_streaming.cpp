#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cca/exact.hpp"
#include "cca/io.hpp"
#include "cca/rng.hpp"
#include "cca/streaming.hpp"
#include "cca/types.hpp"
#include "test_support.hpp"

using cca::Index;
using cca::Matrix;
using cca::SyntheticSource;
using cca::SyntheticSpec;
using cca::Vector;
using cca::ViewPairBatch;

namespace {

SyntheticSpec default_spec() {
  SyntheticSpec spec;
  spec.d_x = 8;
  spec.d_y = 6;
  spec.latent_dim = 2;
  spec.lambda = Vector(2);
  spec.lambda << 4.0, 3.0;
  spec.noise_sigma = 0.5;
  spec.seed = 7;
  return spec;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("the synthetic stream is deterministic in its seed") {
  SyntheticSource a(default_spec());
  SyntheticSource b(default_spec());
  Matrix xa, ya, xb, yb;
  a.next_block(50, xa, ya);
  b.next_block(50, xb, yb);
  CHECK(same_bits(xa, xb));
  CHECK(same_bits(ya, yb));

  SyntheticSpec other = default_spec();
  other.seed = 8;
  SyntheticSource c(other);
  Matrix xc, yc;
  c.next_block(50, xc, yc);
  CHECK_FALSE(same_bits(xa, xc));
}

TEST_CASE("block boundaries do not change the stream") {
  SyntheticSource whole(default_spec());
  SyntheticSource halves(default_spec());
  Matrix x1, y1, xa, ya, xb, yb;
  whole.next_block(100, x1, y1);
  halves.next_block(50, xa, ya);
  halves.next_block(50, xb, yb);
  Matrix x2(100, x1.cols()), y2(100, y1.cols());
  x2 << xa, xb;
  y2 << ya, yb;
  CHECK(same_bits(x1, x2));
  CHECK(same_bits(y1, y2));
}

TEST_CASE("sample covariances converge to the population values") {
  SyntheticSource source(default_spec());
  Matrix x, y;
  source.next_block(20000, x, y);
  cca::center_columns(x);
  cca::center_columns(y);
  const Matrix c_x = cca::sample_covariance(x, x);
  const Matrix c_y = cca::sample_covariance(y, y);
  const Matrix c_xy = cca::sample_covariance(x, y);
  CHECK((c_x - source.population_c_x()).norm() /
            source.population_c_x().norm() <= 0.08);
  CHECK((c_y - source.population_c_y()).norm() /
            source.population_c_y().norm() <= 0.08);
  CHECK((c_xy - source.population_c_xy()).norm() /
            source.population_c_x().norm() <= 0.08);
}

TEST_CASE("population covariances follow the declared spectrum") {
  const SyntheticSpec spec = default_spec();
  SyntheticSource source(spec);
  const Matrix c_x = source.population_c_x();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(c_x);
  const Vector ev = eig.eigenvalues();  // ascending
  const double noise_var = spec.noise_sigma * spec.noise_sigma;
  CHECK(ev(7) == doctest::Approx(4.0).epsilon(1e-10));
  CHECK(ev(6) == doctest::Approx(3.0).epsilon(1e-10));
  for (Index i = 0; i < 6; ++i) {
    CHECK(ev(i) == doctest::Approx(noise_var).epsilon(1e-10));
  }
}

TEST_CASE("explicit loadings are used verbatim") {
  cca::NormalSampler rng(11);
  SyntheticSpec spec = default_spec();
  spec.loading_x = rng.matrix(8, 2);
  spec.loading_y = rng.matrix(6, 2);
  SyntheticSource source(spec);
  CHECK(same_bits(source.loading_x(), spec.loading_x));
  CHECK(same_bits(source.loading_y(), spec.loading_y));
  const double noise_var = spec.noise_sigma * spec.noise_sigma;
  const Matrix want_c_x = spec.loading_x * spec.loading_x.transpose() +
                          noise_var * Matrix::Identity(8, 8);
  CHECK((source.population_c_x() - want_c_x).norm() <= 1e-12);
  CHECK((source.population_c_xy() -
         spec.loading_x * spec.loading_y.transpose())
            .norm() <= 1e-12);
}

TEST_CASE("zero loadings produce a pure-noise stream") {
  SyntheticSpec spec = default_spec();
  spec.loading_x = Matrix::Zero(8, 2);
  spec.loading_y = Matrix::Zero(6, 2);
  SyntheticSource source(spec);
  CHECK(source.population_c_xy().norm() == 0.0);
  Matrix x, y;
  source.next_block(20000, x, y);
  cca::center_columns(x);
  cca::center_columns(y);
  CHECK(cca::sample_covariance(x, y).norm() <= 0.05);
}

TEST_CASE("a noiseless stream stays inside the latent subspace") {
  SyntheticSpec spec = default_spec();
  spec.noise_sigma = 0.0;
  SyntheticSource source(spec);
  Matrix x, y;
  source.next_block(200, x, y);
  // Every sample is a combination of the two loading columns.
  Eigen::JacobiSVD<Matrix> svd(x);
  CHECK(svd.singularValues()(2) <= 1e-10 * svd.singularValues()(0));
}

TEST_CASE("generator specifications are validated") {
  {
    SyntheticSpec spec = default_spec();
    spec.lambda = Vector(3);
    spec.lambda << 4.0, 3.0, 2.0;  // wrong length for latent_dim = 2
    CHECK_THROWS_AS(SyntheticSource{spec}, cca::ConfigError);
  }
  {
    SyntheticSpec spec = default_spec();
    spec.lambda(1) = 0.2;  // below the noise floor 0.25
    CHECK_THROWS_AS(SyntheticSource{spec}, cca::ConfigError);
  }
  {
    SyntheticSpec spec = default_spec();
    spec.latent_dim = 7;  // exceeds d_y = 6
    spec.lambda = Vector::Constant(7, 4.0);
    CHECK_THROWS_AS(SyntheticSource{spec}, cca::ConfigError);
  }
  {
    SyntheticSpec spec = default_spec();
    spec.loading_x = Matrix::Zero(8, 2);  // one view explicit, the other not
    CHECK_THROWS_AS(SyntheticSource{spec}, cca::ConfigError);
  }
  {
    SyntheticSpec spec = default_spec();
    spec.noise_sigma = -0.1;
    CHECK_THROWS_AS(SyntheticSource{spec}, cca::ConfigError);
  }
}

TEST_CASE("batching cuts consecutive blocks with a short tail") {
  cca::NormalSampler rng(12);
  const Matrix x = rng.matrix(250, 4);
  const Matrix y = rng.matrix(250, 3);
  const std::vector<ViewPairBatch> batches = cca::make_batches(x, y, 100);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].x.rows() == 100);
  CHECK(batches[1].x.rows() == 100);
  CHECK(batches[2].x.rows() == 50);
  CHECK(batches[0].index == 0);
  CHECK(batches[1].index == 1);
  CHECK(batches[2].index == 2);
  CHECK(same_bits(batches[1].x, x.middleRows(100, 100)));
  CHECK(same_bits(batches[2].y, y.bottomRows(50)));
}

TEST_CASE("batching validates its inputs") {
  cca::NormalSampler rng(13);
  const Matrix x = rng.matrix(10, 2);
  const Matrix y = rng.matrix(9, 2);
  CHECK_THROWS_AS(cca::make_batches(x, y, 5), cca::DimensionError);
  CHECK_THROWS_AS(cca::make_batches(x, x, 0), cca::ConfigError);
  CHECK_THROWS_AS(cca::make_batches(Matrix(0, 2), Matrix(0, 2), 5),
                  cca::DataError);
}

TEST_CASE("delimited files round-trip bitwise at 17 digits") {
  test_support::TempDir dir;
  cca::NormalSampler rng(14);
  const Matrix m = rng.matrix(12, 5);
  std::string text;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) text += ',';
      text += cca::format_double(m(r, c));
    }
    text += '\n';
  }
  const std::string path = dir.file("round.csv");
  write_text(path, text);
  CHECK(same_bits(cca::load_delimited(path), m));
}

TEST_CASE("delimited parsing reports the offending row and column") {
  test_support::TempDir dir;
  const std::string path = dir.file("bad.csv");
  write_text(path, "1.0,2.0\n3.0,oops\n");
  try {
    cca::load_delimited(path);
    FAIL("expected a parse failure");
  } catch (const cca::DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("delimited parsing rejects structural damage") {
  test_support::TempDir dir;
  const std::string ragged = dir.file("ragged.csv");
  write_text(ragged, "1,2,3\n4,5\n");
  CHECK_THROWS_AS(cca::load_delimited(ragged), cca::DataError);

  const std::string blank = dir.file("blank.csv");
  write_text(blank, "1,2\n\n3,4\n");
  CHECK_THROWS_AS(cca::load_delimited(blank), cca::DataError);

  const std::string inf = dir.file("inf.csv");
  write_text(inf, "1,inf\n");
  CHECK_THROWS_AS(cca::load_delimited(inf), cca::DataError);

  CHECK_THROWS_AS(cca::load_delimited(dir.file("missing.csv")),
                  cca::DataError);

  const std::string empty = dir.file("empty.csv");
  write_text(empty, "");
  CHECK_THROWS_AS(cca::load_delimited(empty), cca::DataError);
}

TEST_CASE("delimited parsing tolerates headers and CRLF endings") {
  test_support::TempDir dir;
  const std::string path = dir.file("crlf.csv");
  write_text(path, "a,b\r\n1.5,2.5\r\n3.5,4.5\r\n");
  const Matrix m = cca::load_delimited(path, /*skip_header=*/true);
  REQUIRE(m.rows() == 2);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == 1.5);
  CHECK(m(1, 1) == 4.5);

  // A final line without a trailing newline still counts.
  const std::string tail = dir.file("tail.csv");
  write_text(tail, "1,2\n3,4");
  CHECK(cca::load_delimited(tail).rows() == 2);
}

TEST_CASE("paired loading insists on matching row counts") {
  test_support::TempDir dir;
  const std::string px = dir.file("x.csv");
  const std::string py = dir.file("y.csv");
  write_text(px, "1,2\n3,4\n5,6\n");
  write_text(py, "1\n2\n");
  try {
    cca::load_delimited_pair(px, py);
    FAIL("expected a row-count failure");
  } catch (const cca::DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("3") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  write_text(py, "1\n2\n3\n");
  const auto [x, y] = cca::load_delimited_pair(px, py);
  CHECK(x.rows() == 3);
  CHECK(y.cols() == 1);
}

TEST_CASE("column splitting carves one matrix into a view pair") {
  Matrix data(1, 4);
  data << 1.0, 2.0, 3.0, 4.0;
  const auto [x, y] = cca::split_views(data, 2);
  REQUIRE(x.cols() == 2);
  REQUIRE(y.cols() == 2);
  CHECK(x(0, 0) == 1.0);
  CHECK(x(0, 1) == 2.0);
  CHECK(y(0, 0) == 3.0);
  CHECK(y(0, 1) == 4.0);
  CHECK_THROWS_AS(cca::split_views(data, 0), cca::DimensionError);
  CHECK_THROWS_AS(cca::split_views(data, 4), cca::DimensionError);
}

TEST_CASE("online centering uses only previously seen rows") {
  cca::OnlineCenterer centerer;
  Matrix first(2, 1);
  first << 2.0, 4.0;  // own mean 3 -> centered to -1, +1
  centerer.apply(first);
  CHECK(first(0, 0) == -1.0);
  CHECK(first(1, 0) == 1.0);
  CHECK(centerer.rows_seen() == 2);

  Matrix second(1, 1);
  second << 5.0;  // centered by the mean of the first batch, 3
  centerer.apply(second);
  CHECK(second(0, 0) == 2.0);
  CHECK(centerer.rows_seen() == 3);

  Matrix third(1, 1);
  third << 11.0 / 3.0;  // running mean of 2, 4, 5 -> centered to zero
  centerer.apply(third);
  CHECK(third(0, 0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("online centering flattens a constant stream") {
  cca::OnlineCenterer centerer;
  for (int j = 0; j < 4; ++j) {
    Matrix batch = Matrix::Constant(5, 3, 2.5);
    centerer.apply(batch);
    CHECK(batch.norm() == 0.0);
  }
}

TEST_CASE("online centering treats both views of a batch sequence") {
  cca::NormalSampler rng(15);
  Matrix x = rng.matrix(30, 3);
  Matrix y = rng.matrix(30, 2);
  x.array() += 10.0;  // large common offset
  y.array() -= 7.0;
  std::vector<ViewPairBatch> batches = cca::make_batches(x, y, 10);
  cca::center_online(batches);
  // The first batch is centered by its own mean, so it is exactly mean-free;
  // later batches are approximately centered.
  CHECK(batches[0].x.colwise().mean().norm() <= 1e-12);
  CHECK(batches[0].y.colwise().mean().norm() <= 1e-12);
  for (const ViewPairBatch& b : batches) {
    CHECK(b.x.colwise().mean().norm() <= 1.5);
    CHECK(b.y.colwise().mean().norm() <= 1.5);
  }
}

TEST_CASE("column centering returns the removed means") {
  Matrix data(2, 2);
  data << 1.0, 10.0, 3.0, 30.0;
  const Vector means = cca::center_columns(data);
  CHECK(means(0) == 2.0);
  CHECK(means(1) == 20.0);
  CHECK(data(0, 0) == -1.0);
  CHECK(data(1, 1) == 10.0);
}

TEST_CASE("sample covariance uses the one-over-n convention") {
  Matrix a(2, 1);
  a << 1.0, -1.0;
  Matrix b(2, 1);
  b << 3.0, -3.0;
  const Matrix c = cca::sample_covariance(a, b);
  REQUIRE(c.rows() == 1);
  CHECK(c(0, 0) == 3.0);
  CHECK_THROWS_AS(cca::sample_covariance(a, Matrix(3, 1)),
                  cca::DimensionError);
}
