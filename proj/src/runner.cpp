#include "cca/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cca/io.hpp"
#include "cca/manifold.hpp"
#include "cca/rng.hpp"
#include "cca/streaming.hpp"
#include "cca/validation.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cca {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using SteadyClock = std::chrono::steady_clock;

double seconds_since(const SteadyClock::time_point& t0) {
  return std::chrono::duration<double>(SteadyClock::now() - t0).count();
}

fs::path resolve_output_dir(const std::string& configured) {
  if (!configured.empty()) {
    return configured;
  }
  const char* env = std::getenv("CCA_OUTPUT_DIR");
  if (env != nullptr && env[0] != '\0') {
    return env;
  }
  return ".";
}

fs::path prepare_output_dir(const std::string& configured) {
  const fs::path dir = resolve_output_dir(configured);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

json config_echo(const RunConfig& c) {
  return json{
      {"data",
       {{"source", c.source},
        {"d_x", c.d_x},
        {"d_y", c.d_y},
        {"latent_dim", c.latent_dim},
        {"lambda", c.lambda},
        {"noise_sigma", c.noise_sigma},
        {"samples", c.samples},
        {"path_x", c.path_x},
        {"path_y", c.path_y},
        {"path", c.path},
        {"split_column", c.split_column},
        {"header", c.header},
        {"seed", c.seed},
        {"centering", c.centering}}},
      {"optimizer",
       {{"k", c.k},
        {"gamma0", c.gamma0},
        {"schedule", c.schedule},
        {"block_size", c.block_size},
        {"passes", c.passes},
        {"parallel", c.parallel},
        {"ridge", c.ridge},
        {"projection", c.projection},
        {"running_cov", c.running_cov}}},
      {"output",
       {{"dir", c.dir},
        {"eval_every", c.eval_every},
        {"checkpoint_in", c.checkpoint_in},
        {"checkpoint_out", c.checkpoint_out}}}};
}

SyntheticSpec spec_from_config(const RunConfig& c) {
  SyntheticSpec spec;
  spec.d_x = c.d_x;
  spec.d_y = c.d_y;
  spec.latent_dim = c.latent_dim;
  spec.lambda.resize(static_cast<Index>(c.lambda.size()));
  for (std::size_t i = 0; i < c.lambda.size(); ++i) {
    spec.lambda(static_cast<Index>(i)) = c.lambda[i];
  }
  spec.noise_sigma = c.noise_sigma;
  spec.seed = c.seed;
  return spec;
}

struct Dataset {
  Matrix x;
  Matrix y;
};

Dataset materialize(const RunConfig& config) {
  Dataset data;
  if (config.source == "synthetic") {
    SyntheticSource source(spec_from_config(config));
    source.next_block(config.samples, data.x, data.y);
  } else if (config.source == "files") {
    std::tie(data.x, data.y) =
        load_delimited_pair(config.path_x, config.path_y, config.header);
  } else {  // "split"; validate_config rejects anything else
    const Matrix whole = load_delimited(config.path, config.header);
    std::tie(data.x, data.y) = split_views(whole, config.split_column);
  }
  if (config.k > std::min(data.x.cols(), data.y.cols())) {
    throw ConfigError("optimizer.k = " + std::to_string(config.k) +
                      " exceeds the data dimensions d_x = " +
                      std::to_string(data.x.cols()) + ", d_y = " +
                      std::to_string(data.y.cols()));
  }
  return data;
}

// Centers the dataset per the configured mode and cuts it into blocks.  On
// return `data` holds exactly the rows the optimizer will consume, so the
// evaluation covariances describe the same stream.
std::vector<ViewPairBatch> prepare_stream(const RunConfig& config,
                                          Dataset& data) {
  if (config.centering == "twopass") {
    center_columns(data.x);
    center_columns(data.y);
    return make_batches(data.x, data.y, config.block_size);
  }
  if (config.centering == "streaming") {
    std::vector<ViewPairBatch> batches =
        make_batches(data.x, data.y, config.block_size);
    center_online(batches);
    Index row = 0;
    for (const ViewPairBatch& b : batches) {
      data.x.middleRows(row, b.x.rows()) = b.x;
      data.y.middleRows(row, b.y.rows()) = b.y;
      row += b.x.rows();
    }
    return batches;
  }
  return make_batches(data.x, data.y, config.block_size);  // "none"
}

void write_json_file(const fs::path& path, const json& value) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  out << value.dump(2) << "\n";
  if (!out) {
    throw DataError("failed while writing '" + path.string() + "'");
  }
}

Matrix random_rotation(NormalSampler& rng, Index k) {
  Matrix q = orthonormalize(rng.matrix(k, k));
  if (q.determinant() < 0.0) {
    q.col(k - 1) = -q.col(k - 1);
  }
  return q;
}

Matrix upper_triangular_perturbation(NormalSampler& rng, Index k, double scale) {
  const Matrix noise = rng.matrix(k, k);
  const Matrix upper = noise.triangularView<Eigen::Upper>();
  return Matrix::Identity(k, k) + scale * upper;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return values[values.size() / 2];
}

}  // namespace

RunResult run_streaming(const RunConfig& config) {
  validate_config(config);
  const fs::path out_dir = prepare_output_dir(config.dir);

  // Materialize the dataset so evaluation can use the full-sample
  // covariances; the optimizer itself only ever sees one block at a time.
  Dataset data = materialize(config);
  const std::vector<ViewPairBatch> batches = prepare_stream(config, data);

  const CovarianceTriple cov =
      estimate_covariances(data.x, data.y, /*center=*/false);
  const CcaSolution reference = exact_cca(cov, config.k, config.ridge);
  if (!(reference.correlations.sum() > 1e-12)) {
    throw NumericalError(
        "run_streaming: the dataset carries no correlation for the reference "
        "solution to capture");
  }

  RsgState initial;
  std::uint64_t start_steps = 0;
  if (!config.checkpoint_in.empty()) {
    Checkpoint cp = load_checkpoint(config.checkpoint_in);
    if (cp.state.d_x() != data.x.cols() || cp.state.d_y() != data.y.cols() ||
        cp.state.k() != config.k) {
      throw DataError("checkpoint '" + config.checkpoint_in +
                      "' does not match the data dimensions or configured k");
    }
    initial = std::move(cp.state);
    start_steps = cp.steps_taken;
  } else {
    // The iterate seed is derived from the data seed so one config seed
    // fixes the whole run while the two streams stay decoupled.
    initial = RsgState::random(data.x.cols(), data.y.cols(), config.k,
                               mix_seed(config.seed));
  }

  RsgOptions options;
  options.gamma0 = config.gamma0;
  options.schedule = parse_schedule(config.schedule);
  options.projection = parse_projection(config.projection);
  options.running_cov = config.running_cov;
  RsgPlus optimizer(std::move(initial), options);
  optimizer.set_steps_taken(start_steps);

  const fs::path metrics_path = out_dir / "metrics.csv";
  std::ofstream csv(metrics_path);
  if (!csv) {
    throw DataError("cannot open '" + metrics_path.string() + "' for writing");
  }
  csv << "samples_seen,pcc,f_tilde,f_pca,whitening_u,whitening_v,elapsed_s\n";

  const auto t0 = SteadyClock::now();
  double run_max_update = 0.0;
  long long skipped_total = 0;

  auto emit_row = [&](Index samples_seen) {
    const RsgState& state = optimizer.state();
    const Matrix u = state.u();
    const Matrix v = state.v();
    const double score = pcc(cov, u, v, reference);
    csv << samples_seen << ',' << format_double(score) << ','
        << format_double(coupling_objective(state, cov.c_xy)) << ','
        << format_double(pca_objective(state, cov.c_x, cov.c_y)) << ','
        << format_double(whitening_residual(u, cov.c_x)) << ','
        << format_double(whitening_residual(v, cov.c_y)) << ','
        << format_double(seconds_since(t0)) << '\n';
    const double min_s =
        std::min(state.s_u.diagonal().cwiseAbs().minCoeff(),
                 state.s_v.diagonal().cwiseAbs().minCoeff());
    if (min_s < 1e-8) {
      std::cerr << "warning: near-singular triangular factor after step "
                << optimizer.steps_taken() << " (min |diag| = " << min_s
                << ")\n";
    }
    return score;
  };

  double last_pcc = emit_row(0);
  Index samples_seen = 0;
  std::uint64_t steps_this_run = 0;
  bool row_pending = false;
  for (Index pass = 0; pass < config.passes; ++pass) {
    for (const ViewPairBatch& batch : batches) {
      StepStats stats;
      try {
        stats = optimizer.step(batch.x, batch.y, config.parallel);
      } catch (const DataError& e) {
        throw DataError("batch " + std::to_string(batch.index) + " (pass " +
                        std::to_string(pass + 1) + "): " + e.what());
      }
      samples_seen += batch.x.rows();
      ++steps_this_run;
      run_max_update = std::max(run_max_update, stats.max_update_norm);
      skipped_total += stats.skipped_blocks;
      if (steps_this_run % static_cast<std::uint64_t>(config.eval_every) == 0) {
        last_pcc = emit_row(samples_seen);
        row_pending = false;
      } else {
        row_pending = true;
      }
    }
  }
  if (row_pending) {
    last_pcc = emit_row(samples_seen);
  }
  const double total_time = seconds_since(t0);
  csv.close();
  if (!csv) {
    throw DataError("failed while writing '" + metrics_path.string() + "'");
  }

  check_state(optimizer.state());

  if (!config.checkpoint_out.empty()) {
    save_checkpoint(config.checkpoint_out, optimizer.state(),
                    optimizer.steps_taken());
  }

  const fs::path summary_path = out_dir / "summary.json";
  write_json_file(summary_path, json{{"final_pcc", last_pcc},
                                     {"total_time_s", total_time},
                                     {"steps", optimizer.steps_taken()},
                                     {"config", config_echo(config)}});

  const DiagnosticsReport diag =
      run_diagnostics(optimizer.state(), cov, reference, run_max_update);
  const fs::path diagnostics_path = out_dir / "diagnostics.json";
  write_json_file(diagnostics_path, json{{"E", diag.e},
                                         {"bound_x", diag.bound_x},
                                         {"bound_y", diag.bound_y},
                                         {"whitening_u", diag.whitening_u},
                                         {"whitening_v", diag.whitening_v},
                                         {"max_update_norm", diag.max_update_norm},
                                         {"ball_radius", diag.ball_radius}});

  RunResult result;
  result.final_state = optimizer.state();
  result.steps = optimizer.steps_taken();
  result.final_pcc = last_pcc;
  result.total_time_s = total_time;
  result.skipped_blocks = skipped_total;
  result.diagnostics = diag;
  result.metrics_path = metrics_path.string();
  result.summary_path = summary_path.string();
  result.diagnostics_path = diagnostics_path.string();
  return result;
}

ExactOutcome run_exact_from_config(const RunConfig& config, bool cross_check) {
  validate_config(config);
  const fs::path out_dir = prepare_output_dir(config.dir);

  const Dataset data = materialize(config);
  const CovarianceTriple cov =
      estimate_covariances(data.x, data.y, config.centering != "none");

  ExactOutcome outcome;
  outcome.solution = exact_cca(cov, config.k, config.ridge);
  if (cross_check) {
    // Independent small-instance route; it centers internally, so feed it the
    // raw materialized data.
    const CcaSolution brute = brute_force_cca(data.x, data.y, config.k);
    outcome.cross_check_deviation =
        (outcome.solution.correlations - brute.correlations)
            .cwiseAbs()
            .maxCoeff();
  }
  const fs::path path = out_dir / "solution.ccas";
  save_solution(path.string(), outcome.solution);
  outcome.solution_path = path.string();
  return outcome;
}

GradientSweep check_gradients(std::uint64_t seed, int trials, double h,
                              double tolerance, bool corrupt) {
  if (trials < 1) {
    throw ConfigError("check_gradients: trials must be at least 1");
  }
  if (!(h > 0.0)) {
    throw ConfigError("check_gradients: step must be positive");
  }
  if (!(tolerance > 0.0)) {
    throw ConfigError("check_gradients: tolerance must be positive");
  }

  const Index d = 12;
  const Index k = 3;
  GradientSweep sweep;
  sweep.h = h;
  sweep.tolerance = tolerance;
  sweep.trials.reserve(static_cast<std::size_t>(trials));
  sweep.seeds.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = seed + static_cast<std::uint64_t>(t);
    NormalSampler rng(mix_seed(trial_seed));
    RsgState state;
    state.u_tilde = orthonormalize(rng.matrix(d, k));
    state.v_tilde = orthonormalize(rng.matrix(d, k));
    state.s_u = upper_triangular_perturbation(rng, k, 0.3);
    state.s_v = upper_triangular_perturbation(rng, k, 0.3);
    state.q_u = random_rotation(rng, k);
    state.q_v = random_rotation(rng, k);
    const Matrix c_xy = rng.matrix(d, d);

    FactorGradients analytic = cca_euclidean_gradients(state, c_xy);
    if (corrupt) {
      // Deliberate fault so the failure path can be exercised end to end.
      analytic.s_u.array() += 1e-3;
    }
    const FdReport report =
        compare_to_finite_differences(state, c_xy, analytic, h);
    sweep.max_rel_error = std::max(sweep.max_rel_error, report.max_rel_error());
    sweep.trials.push_back(report);
    sweep.seeds.push_back(trial_seed);
  }
  sweep.pass = sweep.max_rel_error <= tolerance;
  return sweep;
}

std::vector<StepBenchRow> benchmark_steps(const std::vector<Index>& dims,
                                          Index k, Index block_size,
                                          int batches, std::uint64_t seed) {
  if (dims.empty()) {
    throw ConfigError("benchmark_steps: need at least one dimension");
  }
  if (k < 1) {
    throw ConfigError("benchmark_steps: k must be at least 1");
  }
  if (block_size < 1) {
    throw ConfigError("benchmark_steps: block size must be at least 1");
  }
  if (batches < 1) {
    throw ConfigError("benchmark_steps: batches must be at least 1");
  }
  for (const Index d : dims) {
    if (d < k) {
      throw DimensionError("benchmark_steps: k = " + std::to_string(k) +
                           " exceeds dimension d = " + std::to_string(d));
    }
  }

  std::vector<StepBenchRow> rows;
  rows.reserve(dims.size());
  double prev = 0.0;
  for (const Index d : dims) {
    RsgState state =
        RsgState::random(d, d, k, mix_seed(seed ^ static_cast<std::uint64_t>(d)));
    NormalSampler rng(mix_seed(seed) ^ static_cast<std::uint64_t>(d));
    const Matrix xb = rng.matrix(block_size, d);
    const Matrix yb = rng.matrix(block_size, d);

    RsgOptions options;
    options.gamma0 = 1e-3;  // small constant step keeps the iterate tame
    options.schedule = Schedule::Constant;
    RsgPlus optimizer(std::move(state), options);

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
      const auto t0 = SteadyClock::now();
      (void)optimizer.step(xb, yb, false);
      times.push_back(
          std::chrono::duration<double, std::milli>(SteadyClock::now() - t0)
              .count());
    }

    StepBenchRow row;
    row.d = d;
    row.median_step_ms = median_of(std::move(times));
    if (!rows.empty()) {
      row.ratio_vs_prev = row.median_step_ms / prev;
      row.has_ratio = true;
    }
    prev = row.median_step_ms;
    rows.push_back(row);
  }
  return rows;
}

BenchResult benchmark_pca_gradient(Index d, Index k, Index block_size, int reps,
                                   std::uint64_t seed) {
  if (k < 1 || d < k) {
    throw ConfigError("benchmark_pca_gradient: need d >= k >= 1");
  }
  if (block_size < k) {
    throw ConfigError("benchmark_pca_gradient: block_size must be at least k");
  }
  if (reps < 1) {
    throw ConfigError("benchmark_pca_gradient: reps must be at least 1");
  }

  const RsgState state = RsgState::random(d, d, k, mix_seed(seed));
  NormalSampler rng(seed);
  const Matrix xb = rng.matrix(block_size, d);
  const Matrix yb = rng.matrix(block_size, d);

  // Warm-up runs double as the bitwise serial-vs-parallel comparison.
  const PcaGradient serial = pca_gradient(state, xb, yb, false);
  const PcaGradient parallel = pca_gradient(state, xb, yb, true);

  BenchResult result;
  result.d = d;
  result.k = k;
  result.block_size = block_size;
  result.identical = bitwise_equal(serial.u_tilde, parallel.u_tilde) &&
                     bitwise_equal(serial.v_tilde, parallel.v_tilde) &&
                     serial.skipped_blocks == parallel.skipped_blocks;
#ifdef _OPENMP
  result.threads = omp_get_max_threads();
#else
  result.threads = 1;
#endif

  auto time_ms = [&](bool use_parallel) {
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(reps));
    for (int r = 0; r < reps; ++r) {
      const auto t0 = SteadyClock::now();
      const PcaGradient g = pca_gradient(state, xb, yb, use_parallel);
      times.push_back(
          std::chrono::duration<double, std::milli>(SteadyClock::now() - t0)
              .count());
      // Keep the result alive so the call cannot be optimized away.
      if (g.u_tilde.rows() != d) {
        throw NumericalError("benchmark_pca_gradient: unexpected result shape");
      }
    }
    return median_of(std::move(times));
  };

  result.serial_ms = time_ms(false);
  result.parallel_ms = time_ms(true);
  return result;
}

}  // namespace cca
