#include "cca/streaming.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "cca/manifold.hpp"

namespace cca {

namespace {

SyntheticSpec validate_spec(SyntheticSpec spec) {
  if (spec.latent_dim < 1 || spec.d_x < spec.latent_dim ||
      spec.d_y < spec.latent_dim) {
    throw ConfigError("SyntheticSource: need d_x, d_y >= latent_dim >= 1");
  }
  if (spec.noise_sigma < 0.0) {
    throw ConfigError("SyntheticSource: noise_sigma must be nonnegative");
  }

  const bool has_x = spec.loading_x.size() > 0;
  const bool has_y = spec.loading_y.size() > 0;
  if (has_x != has_y) {
    throw ConfigError("SyntheticSource: explicit loadings must be given for "
                      "both views or neither");
  }
  if (has_x) {
    if (spec.loading_x.rows() != spec.d_x ||
        spec.loading_x.cols() != spec.latent_dim ||
        spec.loading_y.rows() != spec.d_y ||
        spec.loading_y.cols() != spec.latent_dim) {
      throw ConfigError("SyntheticSource: explicit loadings must be "
                        "d_x x latent_dim and d_y x latent_dim");
    }
    if (!spec.loading_x.allFinite() || !spec.loading_y.allFinite()) {
      throw ConfigError("SyntheticSource: explicit loadings must be finite");
    }
    return spec;
  }

  if (spec.lambda.size() != spec.latent_dim) {
    throw ConfigError("SyntheticSource: lambda must have latent_dim = " +
                      std::to_string(spec.latent_dim) + " entries, got " +
                      std::to_string(spec.lambda.size()));
  }
  const double floor_value = spec.noise_sigma * spec.noise_sigma;
  for (Index i = 0; i < spec.lambda.size(); ++i) {
    if (!(spec.lambda(i) > floor_value)) {
      throw ConfigError("SyntheticSource: every lambda must exceed "
                        "noise_sigma^2 so the loading scale is real");
    }
  }
  return spec;
}

[[noreturn]] void parse_failure(const std::string& path, Index row, Index column,
                                const std::string& what) {
  throw DataError(path + ": row " + std::to_string(row) + ", column " +
                  std::to_string(column) + ": " + what);
}

double parse_field(const std::string& path, Index row, Index column,
                   const char* begin, const char* end) {
  while (begin != end && std::isspace(static_cast<unsigned char>(*begin))) {
    ++begin;
  }
  while (end != begin && std::isspace(static_cast<unsigned char>(*(end - 1)))) {
    --end;
  }
  if (begin == end) {
    parse_failure(path, row, column, "empty field");
  }
  double value = 0.0;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc{} || result.ptr != end) {
    parse_failure(path, row, column,
                  "not a number: '" + std::string(begin, end) + "'");
  }
  if (!std::isfinite(value)) {
    parse_failure(path, row, column, "non-finite value");
  }
  return value;
}

}  // namespace

SyntheticSource::SyntheticSource(SyntheticSpec spec)
    : spec_(validate_spec(std::move(spec))), rng_(spec_.seed) {
  if (spec_.loading_x.size() > 0) {
    loading_x_ = spec_.loading_x;
    loading_y_ = spec_.loading_y;
    return;
  }
  const double sigma2 = spec_.noise_sigma * spec_.noise_sigma;
  Vector scale(spec_.latent_dim);
  for (Index i = 0; i < spec_.latent_dim; ++i) {
    scale(i) = std::sqrt(spec_.lambda(i) - sigma2);
  }
  // Loadings consume the stream first, then samples; the whole sequence is a
  // pure function of the seed.
  loading_x_ = orthonormalize(rng_.matrix(spec_.d_x, spec_.latent_dim)) *
               scale.asDiagonal();
  loading_y_ = orthonormalize(rng_.matrix(spec_.d_y, spec_.latent_dim)) *
               scale.asDiagonal();
}

void SyntheticSource::next_block(Index n, Matrix& x, Matrix& y) {
  if (n < 0) {
    throw DimensionError("SyntheticSource::next_block: n must be nonnegative");
  }
  x.resize(n, spec_.d_x);
  y.resize(n, spec_.d_y);
  Vector z(spec_.latent_dim);
  Vector ex(spec_.d_x);
  Vector ey(spec_.d_y);
  // Row-sequential draw order (z, then both noises) so the stream is the
  // same no matter how it is cut into blocks.
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < spec_.latent_dim; ++j) z(j) = rng_();
    for (Index j = 0; j < spec_.d_x; ++j) ex(j) = rng_();
    for (Index j = 0; j < spec_.d_y; ++j) ey(j) = rng_();
    x.row(i) = (loading_x_ * z + spec_.noise_sigma * ex).transpose();
    y.row(i) = (loading_y_ * z + spec_.noise_sigma * ey).transpose();
  }
}

Matrix SyntheticSource::population_c_x() const {
  const double sigma2 = spec_.noise_sigma * spec_.noise_sigma;
  return loading_x_ * loading_x_.transpose() +
         sigma2 * Matrix::Identity(spec_.d_x, spec_.d_x);
}

Matrix SyntheticSource::population_c_y() const {
  const double sigma2 = spec_.noise_sigma * spec_.noise_sigma;
  return loading_y_ * loading_y_.transpose() +
         sigma2 * Matrix::Identity(spec_.d_y, spec_.d_y);
}

Matrix SyntheticSource::population_c_xy() const {
  return loading_x_ * loading_y_.transpose();
}

std::vector<ViewPairBatch> make_batches(const Matrix& x, const Matrix& y,
                                        Index block_size) {
  if (x.rows() != y.rows()) {
    throw DimensionError("make_batches: paired views must have the same "
                         "number of rows");
  }
  if (x.rows() < 1) {
    throw DataError("make_batches: dataset is empty");
  }
  if (block_size < 1) {
    throw ConfigError("make_batches: block_size must be >= 1");
  }
  std::vector<ViewPairBatch> batches;
  const Index n = x.rows();
  batches.reserve(static_cast<std::size_t>((n + block_size - 1) / block_size));
  Index start = 0;
  Index index = 0;
  while (start < n) {
    const Index rows = std::min(block_size, n - start);
    ViewPairBatch batch;
    batch.x = x.middleRows(start, rows);
    batch.y = y.middleRows(start, rows);
    batch.index = index++;
    batches.push_back(std::move(batch));
    start += rows;
  }
  return batches;
}

Matrix load_delimited(const std::string& path, bool skip_header) {
  std::ifstream in(path);
  if (!in) {
    throw DataError(path + ": cannot open file");
  }

  std::string line;
  Index file_row = 0;
  if (skip_header) {
    if (!std::getline(in, line)) {
      throw DataError(path + ": missing header line");
    }
    ++file_row;
  }

  std::vector<std::vector<double>> rows;
  Index columns = -1;
  while (std::getline(in, line)) {
    ++file_row;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) {
        break;  // trailing newline
      }
      parse_failure(path, file_row, 1, "empty line");
    }

    std::vector<double> values;
    std::size_t start = 0;
    Index column = 1;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::size_t end = (comma == std::string::npos) ? line.size() : comma;
      values.push_back(parse_field(path, file_row, column,
                                   line.data() + start, line.data() + end));
      if (comma == std::string::npos) {
        break;
      }
      start = comma + 1;
      ++column;
    }

    if (columns < 0) {
      columns = static_cast<Index>(values.size());
    } else if (static_cast<Index>(values.size()) != columns) {
      parse_failure(path, file_row, static_cast<Index>(values.size()),
                    "expected " + std::to_string(columns) + " fields, got " +
                        std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty()) {
    throw DataError(path + ": no data rows");
  }
  Matrix out(static_cast<Index>(rows.size()), columns);
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < columns; ++j) {
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

std::pair<Matrix, Matrix> load_delimited_pair(const std::string& path_x,
                                              const std::string& path_y,
                                              bool skip_header) {
  Matrix x = load_delimited(path_x, skip_header);
  Matrix y = load_delimited(path_y, skip_header);
  if (x.rows() != y.rows()) {
    throw DataError("paired files disagree on sample count: " + path_x +
                    " has " + std::to_string(x.rows()) + " rows, " + path_y +
                    " has " + std::to_string(y.rows()));
  }
  return {std::move(x), std::move(y)};
}

std::pair<Matrix, Matrix> split_views(const Matrix& data, Index split_column) {
  if (split_column <= 0 || split_column >= data.cols()) {
    throw DimensionError("split_views: split column must satisfy 0 < c < " +
                         std::to_string(data.cols()) + ", got " +
                         std::to_string(split_column));
  }
  return {data.leftCols(split_column),
          data.rightCols(data.cols() - split_column)};
}

void OnlineCenterer::apply(Matrix& batch) {
  if (batch.rows() < 1) {
    throw DataError("OnlineCenterer: empty batch");
  }
  const Vector raw_mean = batch.colwise().mean().transpose();
  if (rows_seen_ == 0) {
    mean_ = raw_mean;  // first batch is centered by its own mean
  } else if (mean_.size() != batch.cols()) {
    throw DimensionError("OnlineCenterer: column count changed mid-stream");
  }
  batch.rowwise() -= mean_.transpose();

  // Fold the batch into the running mean only after it has been centered,
  // so the next batch sees the mean of everything before it.
  const double seen = static_cast<double>(rows_seen_);
  const double added = static_cast<double>(batch.rows());
  mean_ = ((mean_ * seen + raw_mean * added) / (seen + added)).eval();
  rows_seen_ += batch.rows();
}

void center_online(std::vector<ViewPairBatch>& batches) {
  OnlineCenterer center_x;
  OnlineCenterer center_y;
  for (ViewPairBatch& batch : batches) {
    center_x.apply(batch.x);
    center_y.apply(batch.y);
  }
}

Vector center_columns(Matrix& data) {
  if (data.rows() < 1) {
    throw DataError("center_columns: no rows");
  }
  const Vector means = data.colwise().mean().transpose();
  data.rowwise() -= means.transpose();
  return means;
}

Matrix sample_covariance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.rows() < 1) {
    throw DimensionError("sample_covariance: inputs must share a positive "
                         "number of rows");
  }
  return (a.transpose() * b) / static_cast<double>(a.rows());
}

}  // namespace cca
