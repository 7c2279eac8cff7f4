#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cca/rsgplus.hpp"
#include "cca/types.hpp"

namespace cca {

// Full configuration of a streaming run.  Key names use dotted sections, e.g.
// "data.d_x" or "optimizer.gamma0"; the same keys work in a config file
//
//   [data]
//   d_x = 50
//   lambda = 25, 6, 3.5, 2
//
// and as command-line overrides (--data.d_x 50), which take precedence.
struct RunConfig {
  // [data] source selection: "synthetic" (generator), "files" (one delimited
  // file per view), or "split" (one delimited file cut at a column).
  std::string source = "synthetic";

  // synthetic generator parameters
  Index d_x = 50;
  Index d_y = 50;
  Index latent_dim = 4;
  std::vector<double> lambda = {25.0, 6.0, 3.5, 2.0};
  double noise_sigma = 0.5;
  Index samples = 50000;

  // file sources
  std::string path_x;       // source = files
  std::string path_y;       // source = files
  std::string path;         // source = split
  Index split_column = 0;   // source = split: first view's column count
  bool header = false;      // skip one header line when reading files

  std::uint64_t seed = 1;
  std::string centering = "twopass";  // none | twopass | streaming

  // [optimizer]
  Index k = 4;
  double gamma0 = 1.0;
  std::string schedule = "inverse_t";  // or "constant"
  Index block_size = 100;
  Index passes = 1;  // passes over a fixed dataset
  bool parallel = false;
  double ridge = 0.0;
  std::string projection = "standard";  // or "orthogonal"
  bool running_cov = false;          // average cross-covariance over batches

  // [output]
  std::string dir;  // empty: $CCA_OUTPUT_DIR if set, else "."
  Index eval_every = 25;
  std::string checkpoint_in;
  std::string checkpoint_out;
};

// Parses a config file of `key = value` lines with optional [section]
// headers and '#' comments.  Unknown keys and unparsable values raise
// ConfigError.  An empty path returns the defaults.
RunConfig load_config(const std::string& path);

// Applies one dotted-key override to an existing config.
void apply_override(RunConfig& config, const std::string& key,
                    const std::string& value);

// Consistency checks across fields (dimensions, positivity, enum values).
void validate_config(const RunConfig& config);

Schedule parse_schedule(const std::string& name);

ProjectionVariant parse_projection(const std::string& name);

}  // namespace cca
