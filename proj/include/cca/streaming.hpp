#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cca/rng.hpp"
#include "cca/types.hpp"

namespace cca {

// Parameters of the paired-view synthetic generator.  Samples share a latent
// vector z ~ N(0, I_latent):
//
//   x = A z + e_x,   y = B z + e_y,   e ~ N(0, noise_sigma^2 I)
//
// By default A and B have orthonormal columns (drawn independently per view)
// scaled by sqrt(lambda_i - noise_sigma^2), so each view's population
// covariance has top eigenvalues lambda_1 >= ... >= lambda_latent and
// noise_sigma^2 below.  Explicit loadings can be supplied instead; they are
// used verbatim (even rank-deficient or zero, which yields a pure-noise
// stream) and lambda is then ignored.
struct SyntheticSpec {
  Index d_x = 50;
  Index d_y = 50;
  Index latent_dim = 4;
  Vector lambda;       // latent_dim entries, each > noise_sigma^2
  double noise_sigma = 0.5;
  std::uint64_t seed = 1;
  Matrix loading_x;    // optional explicit d_x x latent_dim loadings
  Matrix loading_y;    // optional explicit d_y x latent_dim loadings
};

class SyntheticSource {
 public:
  explicit SyntheticSource(SyntheticSpec spec);

  // Draws the next n paired samples (rows).  Consecutive calls continue the
  // same deterministic stream.
  void next_block(Index n, Matrix& x, Matrix& y);

  const SyntheticSpec& spec() const { return spec_; }
  const Matrix& loading_x() const { return loading_x_; }
  const Matrix& loading_y() const { return loading_y_; }

  // Population covariances implied by the loadings, for oracle evaluation.
  Matrix population_c_x() const;
  Matrix population_c_y() const;
  Matrix population_c_xy() const;

 private:
  SyntheticSpec spec_;
  Matrix loading_x_;  // d_x x latent_dim
  Matrix loading_y_;  // d_y x latent_dim
  NormalSampler rng_;
};

// One paired sample block from a fixed dataset, tagged with its 0-based
// position in the stream.
struct ViewPairBatch {
  Matrix x;
  Matrix y;
  Index index = 0;
};

// Cuts a paired dataset into consecutive blocks of `block_size` rows; the
// final block holds the remainder and may be short.  Requires matching row
// counts, at least one row, and block_size >= 1.
std::vector<ViewPairBatch> make_batches(const Matrix& x, const Matrix& y,
                                        Index block_size);

// Reads a comma-separated numeric matrix.  Every row must have the same
// number of fields and every field must parse as a finite double; violations
// raise DataError naming the 1-based file row and column.  With skip_header
// set the first line is discarded.  Values written with 17 significant
// digits reload to bit-identical doubles.
Matrix load_delimited(const std::string& path, bool skip_header = false);

// Loads two delimited files as a paired dataset; row counts must agree.
std::pair<Matrix, Matrix> load_delimited_pair(const std::string& path_x,
                                              const std::string& path_y,
                                              bool skip_header = false);

// Splits columns [0, c) and [c, d) of one matrix into a view pair.
// Requires 0 < c < d.
std::pair<Matrix, Matrix> split_views(const Matrix& data, Index split_column);

// Streaming mean removal: batch j is centered by the mean of all rows seen
// before it (batch 1 by its own mean), and the running mean is updated only
// after a batch is emitted.  The centering bias vanishes as O(1/j).
class OnlineCenterer {
 public:
  // Centers one batch in place.
  void apply(Matrix& batch);

  Index rows_seen() const { return rows_seen_; }

 private:
  Vector mean_;
  Index rows_seen_ = 0;
};

// Applies online centering to both views of a batch sequence, in order.
void center_online(std::vector<ViewPairBatch>& batches);

// Subtracts each column's mean in place; returns the means.
Vector center_columns(Matrix& data);

// Sample cross covariance a^T b / N with the 1/N convention (no mean
// subtraction; center first if the data are not already zero-mean).
Matrix sample_covariance(const Matrix& a, const Matrix& b);

}  // namespace cca
