#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cca/config.hpp"
#include "cca/exact.hpp"
#include "cca/rsgplus.hpp"
#include "cca/types.hpp"
#include "cca/validation.hpp"

namespace cca {

struct RunResult {
  RsgState final_state;
  std::uint64_t steps = 0;
  double final_pcc = 0.0;
  double total_time_s = 0.0;
  long long skipped_blocks = 0;
  DiagnosticsReport diagnostics;
  std::string metrics_path;
  std::string summary_path;
  std::string diagnostics_path;
};

// Full streaming experiment driven by a config: materializes the dataset
// (synthetic generator, paired files, or one file split at a column), applies
// the configured centering, streams it through the optimizer in blocks for
// the configured number of passes, evaluates the iterate against the
// full-dataset covariances on a fixed cadence, and writes three files into
// the output directory:
//
//   metrics.csv       one evaluation row per cadence point; columns
//                     samples_seen,pcc,f_tilde,f_pca,whitening_u,whitening_v,
//                     elapsed_s (elapsed_s is wall time and will differ
//                     between repeat runs; every other column is
//                     deterministic for a fixed config)
//   summary.json      final_pcc, total_time_s, steps, and the config echo
//   diagnostics.json  objective gap vs. the exact solution (E), per-view
//                     reconstruction bounds, whitening residuals, largest
//                     update norm, and the safe step ball radius
//
// The output directory is config.dir if set, else $CCA_OUTPUT_DIR, else ".".
// Data errors raised while a batch is being consumed carry the batch index.
RunResult run_streaming(const RunConfig& config);

struct ExactOutcome {
  CcaSolution solution;
  std::string solution_path;
  // Largest |rho_exact - rho_brute| over the top-k correlations when the
  // brute-force cross-check was requested; -1 when it was not run.
  double cross_check_deviation = -1.0;
};

// Exact solver on the sample covariances of the materialized dataset; writes
// solution.ccas into the output directory.  With cross_check set the same
// data are solved again by the independent small-instance route (subject to
// its d <= 30, N <= 5000 limits) and the correlation deviation is recorded.
ExactOutcome run_exact_from_config(const RunConfig& config,
                                   bool cross_check = false);

// Result of sweeping the analytic coupling-term gradients against central
// finite differences at several random iterates.
struct GradientSweep {
  std::vector<FdReport> trials;        // one report per probed state
  std::vector<std::uint64_t> seeds;    // seed used for each trial
  double h = 0.0;
  double tolerance = 0.0;
  double max_rel_error = 0.0;          // over all factors and trials
  bool pass = false;                   // max_rel_error <= tolerance
};

// Checks all six analytic factor gradients at `trials` seeded random states
// (d_x = d_y = 12, k = 3; trial i uses seed + i) against central finite
// differences with step h.  A trial passes when every factor's relative
// error is at most `tolerance`.  With `corrupt` set, one analytic gradient
// is deliberately perturbed before comparison; the sweep must then fail,
// which exercises the failure path end to end.
GradientSweep check_gradients(std::uint64_t seed, int trials, double h = 1e-6,
                              double tolerance = 1e-5, bool corrupt = false);

struct StepBenchRow {
  Index d = 0;
  double median_step_ms = 0.0;
  double ratio_vs_prev = 0.0;  // median / previous row's median
  bool has_ratio = false;      // false on the first row
};

// Times one full optimizer step (block covariance, both gradient blocks,
// projection, update) at each square dimension in `dims` with a fixed block
// size, reusing one random batch per dimension.  Reports the median over
// `batches` timed steps and the ratio between consecutive dimensions.
// Dimension checks run before any timing starts.
std::vector<StepBenchRow> benchmark_steps(const std::vector<Index>& dims,
                                          Index k, Index block_size,
                                          int batches, std::uint64_t seed);

struct BenchResult {
  Index d = 0;
  Index k = 0;
  Index block_size = 0;
  int threads = 1;
  double serial_ms = 0.0;
  double parallel_ms = 0.0;
  bool identical = false;  // parallel result bit-identical to serial
};

// Times the block-gradient kernel in its serial and OpenMP forms on one
// synthetic block (median of `reps` timings) and verifies the two paths
// agree bitwise.
BenchResult benchmark_pca_gradient(Index d, Index k, Index block_size, int reps,
                                   std::uint64_t seed);

}  // namespace cca
