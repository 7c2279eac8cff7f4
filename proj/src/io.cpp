#include "cca/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "cca/validation.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary container I/O assumes a little-endian host");

namespace cca {

namespace {

constexpr std::uint64_t max_elements = 100'000'000;  // ~800 MB payload cap

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot open '" + path + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open '" + path + "' for reading");
  }
  return in;
}

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) {
    throw DataError("'" + path + "' is truncated");
  }
  return value;
}

void write_magic(std::ofstream& out, const char magic[4]) {
  out.write(magic, 4);
}

void expect_magic(std::ifstream& in, const char magic[4], const std::string& path) {
  char got[4] = {};
  in.read(got, 4);
  if (!in || std::memcmp(got, magic, 4) != 0) {
    throw DataError("'" + path + "' does not start with the expected magic '" +
                    std::string(magic, 4) + "'");
  }
}

void write_payload(std::ofstream& out, const Matrix& m) {
  std::vector<double> buffer(static_cast<std::size_t>(m.size()));
  std::size_t pos = 0;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      buffer[pos++] = m(i, j);
    }
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(double)));
}

Matrix read_payload(std::ifstream& in, Index rows, Index cols,
                    const std::string& path) {
  std::vector<double> buffer(static_cast<std::size_t>(rows) *
                             static_cast<std::size_t>(cols));
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  if (!in) {
    throw DataError("'" + path + "' is truncated");
  }
  Matrix m(rows, cols);
  std::size_t pos = 0;
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) {
      m(i, j) = buffer[pos++];
    }
  }
  return m;
}

void expect_eof(std::ifstream& in, const std::string& path) {
  char extra = 0;
  in.read(&extra, 1);
  if (!in.eof()) {
    throw DataError("'" + path + "' has trailing data after the payload");
  }
}

void check_dims(std::uint64_t rows, std::uint64_t cols, const std::string& path) {
  if (rows == 0 || cols == 0 || rows * cols > max_elements) {
    throw DataError("'" + path + "' has an implausible header (" +
                    std::to_string(rows) + "x" + std::to_string(cols) + ")");
  }
}

}  // namespace

void save_matrix(const std::string& path, const Matrix& m) {
  if (m.rows() < 1 || m.cols() < 1) {
    throw DataError("save_matrix: refusing to write an empty matrix");
  }
  std::ofstream out = open_out(path);
  write_magic(out, "CCAM");
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  write_payload(out, m);
  if (!out) {
    throw DataError("failed while writing '" + path + "'");
  }
}

Matrix load_matrix(const std::string& path) {
  std::ifstream in = open_in(path);
  expect_magic(in, "CCAM", path);
  const auto rows = read_pod<std::uint64_t>(in, path);
  const auto cols = read_pod<std::uint64_t>(in, path);
  check_dims(rows, cols, path);
  Matrix m = read_payload(in, static_cast<Index>(rows), static_cast<Index>(cols), path);
  expect_eof(in, path);
  return m;
}

void save_checkpoint(const std::string& path, const RsgState& state,
                     std::uint64_t steps_taken) {
  std::ofstream out = open_out(path);
  write_magic(out, "RSG+");
  write_pod<std::uint16_t>(out, checkpoint_format_version);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(state.d_x()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(state.d_y()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(state.k()));
  write_pod<std::uint64_t>(out, steps_taken);
  for (const Matrix* m : {&state.u_tilde, &state.v_tilde, &state.s_u,
                          &state.s_v, &state.q_u, &state.q_v}) {
    write_payload(out, *m);
  }
  if (!out) {
    throw DataError("failed while writing '" + path + "'");
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in = open_in(path);
  expect_magic(in, "RSG+", path);
  const auto version = read_pod<std::uint16_t>(in, path);
  if (version != checkpoint_format_version) {
    throw DataError("'" + path + "' has unsupported checkpoint version " +
                    std::to_string(version));
  }
  const auto d_x = read_pod<std::uint32_t>(in, path);
  const auto d_y = read_pod<std::uint32_t>(in, path);
  const auto k = read_pod<std::uint32_t>(in, path);
  check_dims(d_x, k, path);
  check_dims(d_y, k, path);
  if (k > d_x || k > d_y) {
    throw DataError("'" + path + "' has k larger than a view dimension");
  }

  Checkpoint cp;
  cp.steps_taken = read_pod<std::uint64_t>(in, path);
  cp.state.u_tilde = read_payload(in, d_x, k, path);
  cp.state.v_tilde = read_payload(in, d_y, k, path);
  cp.state.s_u = read_payload(in, k, k, path);
  cp.state.s_v = read_payload(in, k, k, path);
  cp.state.q_u = read_payload(in, k, k, path);
  cp.state.q_v = read_payload(in, k, k, path);
  expect_eof(in, path);

  try {
    check_state(cp.state);
  } catch (const Error& e) {
    throw DataError("'" + path + "' holds an invalid iterate: " +
                    std::string(e.what()));
  }
  return cp;
}

void save_solution(const std::string& path, const CcaSolution& solution) {
  if (solution.u_star.cols() != solution.v_star.cols() ||
      solution.correlations.size() != solution.u_star.cols() ||
      solution.u_star.cols() < 1) {
    throw DataError("save_solution: inconsistent solution shapes");
  }
  std::ofstream out = open_out(path);
  write_magic(out, "CCAS");
  write_pod<std::uint16_t>(out, solution_format_version);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(solution.u_star.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(solution.v_star.rows()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(solution.u_star.cols()));
  for (Index i = 0; i < solution.correlations.size(); ++i) {
    write_pod<double>(out, solution.correlations(i));
  }
  write_payload(out, solution.u_star);
  write_payload(out, solution.v_star);
  if (!out) {
    throw DataError("failed while writing '" + path + "'");
  }
}

CcaSolution load_solution(const std::string& path) {
  std::ifstream in = open_in(path);
  expect_magic(in, "CCAS", path);
  const auto version = read_pod<std::uint16_t>(in, path);
  if (version != solution_format_version) {
    throw DataError("'" + path + "' has unsupported solution version " +
                    std::to_string(version));
  }
  const auto d_x = read_pod<std::uint32_t>(in, path);
  const auto d_y = read_pod<std::uint32_t>(in, path);
  const auto k = read_pod<std::uint32_t>(in, path);
  check_dims(d_x, k, path);
  check_dims(d_y, k, path);

  CcaSolution solution;
  solution.correlations.resize(static_cast<Index>(k));
  for (std::uint32_t i = 0; i < k; ++i) {
    solution.correlations(static_cast<Index>(i)) = read_pod<double>(in, path);
  }
  solution.u_star = read_payload(in, d_x, k, path);
  solution.v_star = read_payload(in, d_y, k, path);
  expect_eof(in, path);
  return solution;
}

std::string format_double(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

}  // namespace cca
