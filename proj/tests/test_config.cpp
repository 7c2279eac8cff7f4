#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <string>

#include "cca/config.hpp"
#include "cca/types.hpp"
#include "test_support.hpp"

using cca::RunConfig;

namespace {

std::string write_config(test_support::TempDir& dir, const std::string& name,
                         const std::string& text) {
  const std::string path = dir.file(name);
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

}  // namespace

TEST_CASE("an empty path yields the default configuration") {
  const RunConfig c = cca::load_config("");
  CHECK(c.source == "synthetic");
  CHECK(c.d_x == 50);
  CHECK(c.d_y == 50);
  CHECK(c.latent_dim == 4);
  REQUIRE(c.lambda.size() == 4);
  CHECK(c.lambda[0] == 25.0);
  CHECK(c.lambda[3] == 2.0);
  CHECK(c.noise_sigma == 0.5);
  CHECK(c.samples == 50000);
  CHECK(c.seed == 1);
  CHECK(c.centering == "twopass");
  CHECK(c.k == 4);
  CHECK(c.gamma0 == 1.0);
  CHECK(c.schedule == "inverse_t");
  CHECK(c.block_size == 100);
  CHECK(c.passes == 1);
  CHECK_FALSE(c.parallel);
  CHECK(c.ridge == 0.0);
  CHECK(c.projection == "standard");
  CHECK_FALSE(c.running_cov);
  CHECK(c.dir.empty());
  CHECK(c.eval_every == 25);
  CHECK_NOTHROW(cca::validate_config(c));
}

TEST_CASE("config files support sections, comments and quoting") {
  test_support::TempDir dir;
  const std::string path = write_config(dir, "full.cfg",
                                        "# run shape\n"
                                        "[data]\n"
                                        "d_x = 12      # inline comment\n"
                                        "d_y = 10\n"
                                        "latent_dim = 2\n"
                                        "lambda = 4.0, 3.0\n"
                                        "seed = 9\n"
                                        "\n"
                                        "[optimizer]\n"
                                        "k = 2\n"
                                        "gamma0 = 0.25\n"
                                        "parallel = true\n"
                                        "\n"
                                        "[output]\n"
                                        "dir = \"results dir\"\n"
                                        "output.eval_every = 5\n");
  const RunConfig c = cca::load_config(path);
  CHECK(c.d_x == 12);
  CHECK(c.d_y == 10);
  CHECK(c.latent_dim == 2);
  REQUIRE(c.lambda.size() == 2);
  CHECK(c.lambda[1] == 3.0);
  CHECK(c.seed == 9);
  CHECK(c.k == 2);
  CHECK(c.gamma0 == 0.25);
  CHECK(c.parallel);
  CHECK(c.dir == "results dir");
  CHECK(c.eval_every == 5);
  CHECK_NOTHROW(cca::validate_config(c));
}

TEST_CASE("fully dotted keys work outside any section") {
  test_support::TempDir dir;
  const std::string path = write_config(dir, "dotted.cfg",
                                        "data.d_x = 7\n"
                                        "optimizer.k = 3\n");
  const RunConfig c = cca::load_config(path);
  CHECK(c.d_x == 7);
  CHECK(c.k == 3);
}

TEST_CASE("parse failures carry the file position") {
  test_support::TempDir dir;
  const std::string path = write_config(dir, "bad.cfg",
                                        "[data]\n"
                                        "d_x = 12\n"
                                        "d_y = twelve\n");
  try {
    cca::load_config(path);
    FAIL("expected a parse failure");
  } catch (const cca::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(":3") != std::string::npos);
    CHECK(msg.find("d_y") != std::string::npos);
  }
}

TEST_CASE("structural damage is rejected with line numbers") {
  test_support::TempDir dir;
  CHECK_THROWS_AS(
      cca::load_config(write_config(dir, "a.cfg", "[data\nd_x = 1\n")),
      cca::ConfigError);
  CHECK_THROWS_AS(
      cca::load_config(write_config(dir, "b.cfg", "just some words\n")),
      cca::ConfigError);
  CHECK_THROWS_AS(
      cca::load_config(write_config(dir, "c.cfg", "= 5\n")),
      cca::ConfigError);
  CHECK_THROWS_AS(cca::load_config(dir.file("missing.cfg")),
                  cca::ConfigError);
}

TEST_CASE("unknown keys are refused") {
  test_support::TempDir dir;
  const std::string path = write_config(dir, "unknown.cfg",
                                        "[data]\n"
                                        "dimension = 4\n");
  CHECK_THROWS_AS(cca::load_config(path), cca::ConfigError);

  RunConfig c;
  CHECK_THROWS_AS(cca::apply_override(c, "optimizer.momentum", "0.9"),
                  cca::ConfigError);
}

TEST_CASE("overrides replace file values") {
  test_support::TempDir dir;
  const std::string path = write_config(dir, "base.cfg",
                                        "[optimizer]\n"
                                        "gamma0 = 0.5\n"
                                        "k = 2\n");
  RunConfig c = cca::load_config(path);
  CHECK(c.gamma0 == 0.5);
  cca::apply_override(c, "optimizer.gamma0", "0.125");
  cca::apply_override(c, "data.lambda", "9, 8, 7");
  cca::apply_override(c, "data.latent_dim", "3");
  CHECK(c.gamma0 == 0.125);
  REQUIRE(c.lambda.size() == 3);
  CHECK(c.lambda[2] == 7.0);
  CHECK(c.k == 2);
}

TEST_CASE("override values are type checked") {
  RunConfig c;
  CHECK_THROWS_AS(cca::apply_override(c, "data.d_x", "3.5"), cca::ConfigError);
  CHECK_THROWS_AS(cca::apply_override(c, "data.d_x", "-3"), cca::ConfigError);
  CHECK_THROWS_AS(cca::apply_override(c, "optimizer.gamma0", "fast"),
                  cca::ConfigError);
  CHECK_THROWS_AS(cca::apply_override(c, "optimizer.parallel", "yes"),
                  cca::ConfigError);
  CHECK_THROWS_AS(cca::apply_override(c, "data.lambda", "1,,2"),
                  cca::ConfigError);
  CHECK_THROWS_AS(cca::apply_override(c, "data.lambda", ""),
                  cca::ConfigError);
}

TEST_CASE("validation enforces per-source requirements") {
  RunConfig c;

  SUBCASE("synthetic dimension rules") {
    c.latent_dim = 60;  // above min(d_x, d_y) = 50
    c.lambda.assign(60, 9.0);
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
  SUBCASE("lambda length must match latent_dim") {
    c.lambda = {25.0, 6.0};
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
  SUBCASE("lambda entries must clear the noise floor") {
    c.lambda = {25.0, 6.0, 3.5, 0.2};  // 0.2 < 0.25 = noise variance
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
  SUBCASE("k cannot exceed the data dimensions") {
    c.k = 51;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
  SUBCASE("file sources need both paths") {
    c.source = "files";
    c.path_x = "x.csv";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.path_y = "y.csv";
    CHECK_NOTHROW(cca::validate_config(c));
  }
  SUBCASE("split sources need a path and a positive split point") {
    c.source = "split";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.path = "both.csv";
    c.split_column = 0;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.split_column = 3;
    CHECK_NOTHROW(cca::validate_config(c));
  }
  SUBCASE("unknown enumerations are refused") {
    c.source = "stream";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.source = "synthetic";
    c.centering = "always";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.centering = "none";
    c.schedule = "linear";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.schedule = "constant";
    c.projection = "oblique";
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
  SUBCASE("scalar ranges") {
    c.gamma0 = 0.0;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.gamma0 = 0.1;
    c.block_size = 0;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.block_size = 10;
    c.passes = 0;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.passes = 1;
    c.ridge = -1e-9;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
    c.ridge = 0.0;
    c.eval_every = 0;
    CHECK_THROWS_AS(cca::validate_config(c), cca::ConfigError);
  }
}

TEST_CASE("schedule and projection names parse to their variants") {
  CHECK(cca::parse_schedule("inverse_t") == cca::Schedule::InverseT);
  CHECK(cca::parse_schedule("constant") == cca::Schedule::Constant);
  CHECK_THROWS_AS(cca::parse_schedule("Inverse_T"), cca::ConfigError);
  CHECK(cca::parse_projection("standard") ==
        cca::ProjectionVariant::Standard);
  CHECK(cca::parse_projection("orthogonal") ==
        cca::ProjectionVariant::Orthogonal);
  CHECK_THROWS_AS(cca::parse_projection(""), cca::ConfigError);
}
