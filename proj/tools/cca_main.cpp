#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "cca/config.hpp"
#include "cca/io.hpp"
#include "cca/runner.hpp"
#include "cca/types.hpp"
#include "cca/validation.hpp"

namespace {

// Turns leftover tokens (--key value | --key=value) into config overrides.
std::vector<std::pair<std::string, std::string>> parse_overrides(
    const std::vector<std::string>& extras) {
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& token = extras[i];
    if (token.rfind("--", 0) != 0 || token.size() <= 2) {
      throw cca::ConfigError("unexpected argument '" + token +
                             "'; overrides look like --data.seed 7");
    }
    const std::string body = token.substr(2);
    const std::size_t eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else {
      if (i + 1 >= extras.size()) {
        throw cca::ConfigError("missing value for override '--" + body + "'");
      }
      out.emplace_back(body, extras[++i]);
    }
  }
  return out;
}

cca::RunConfig assemble_config(const std::string& config_path,
                               const std::vector<std::string>& extras) {
  cca::RunConfig config = cca::load_config(config_path);
  for (const auto& [key, value] : parse_overrides(extras)) {
    cca::apply_override(config, key, value);
  }
  return config;
}

int do_run(const std::string& config_path,
           const std::vector<std::string>& extras) {
  const cca::RunConfig config = assemble_config(config_path, extras);
  const cca::RunResult result = cca::run_streaming(config);
  std::cout << "wrote " << result.metrics_path << ", " << result.summary_path
            << ", " << result.diagnostics_path << "\n"
            << "final pcc " << result.final_pcc << " after " << result.steps
            << " steps in " << result.total_time_s << " s\n"
            << "skipped sub-blocks: " << result.skipped_blocks << "\n";
  return 0;
}

int do_exact(const std::string& config_path,
             const std::vector<std::string>& extras, bool cross_check) {
  const cca::RunConfig config = assemble_config(config_path, extras);
  const cca::ExactOutcome outcome =
      cca::run_exact_from_config(config, cross_check);
  std::cout << "wrote " << outcome.solution_path << "\ncorrelations =";
  for (cca::Index i = 0; i < outcome.solution.correlations.size(); ++i) {
    std::cout << ' ' << cca::format_double(outcome.solution.correlations(i));
  }
  std::cout << "\n";
  if (cross_check) {
    std::cout << "cross-check max deviation = "
              << cca::format_double(outcome.cross_check_deviation) << "\n";
    if (!(outcome.cross_check_deviation <= 1e-8)) {
      std::cerr << "cross-check FAILED: solvers disagree beyond 1e-8\n";
      return 1;
    }
    std::cout << "cross-check passed\n";
  }
  return 0;
}

int do_check_gradients(std::uint64_t seed, int trials, bool corrupt) {
  const cca::GradientSweep sweep =
      cca::check_gradients(seed, trials, 1e-6, 1e-5, corrupt);
  std::cout << "factor gradient check: " << trials << " random state(s), h = "
            << sweep.h << ", tolerance = " << sweep.tolerance << "\n";
  for (std::size_t t = 0; t < sweep.trials.size(); ++t) {
    std::cout << "  seed " << sweep.seeds[t] << ":";
    for (std::size_t f = 0; f < cca::factor_names.size(); ++f) {
      std::cout << "  " << cca::factor_names[f] << " "
                << sweep.trials[t].rel_error[f];
    }
    std::cout << "\n";
  }
  std::cout << "max relative error " << sweep.max_rel_error << "\n";
  if (!sweep.pass) {
    std::cerr << "gradient check FAILED\n";
    return 1;
  }
  std::cout << "gradient check passed\n";
  return 0;
}

int do_bench(const std::vector<cca::Index>& dims, cca::Index k,
             cca::Index block_size, int batches, std::uint64_t seed) {
  const std::vector<cca::StepBenchRow> rows =
      cca::benchmark_steps(dims, k, block_size, batches, seed);
  std::cout << "d,median_step_ms,ratio_vs_prev\n";
  for (const cca::StepBenchRow& row : rows) {
    std::cout << row.d << ',' << row.median_step_ms << ',';
    if (row.has_ratio) {
      std::cout << row.ratio_vs_prev;
    }
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming canonical correlation analysis toolkit"};
  app.require_subcommand(1);

  std::string run_config_path;
  CLI::App* run_cmd = app.add_subcommand(
      "run", "streaming optimization with periodic evaluation");
  run_cmd->add_option("--config", run_config_path, "config file path");
  run_cmd->allow_extras();

  std::string exact_config_path;
  bool exact_cross_check = false;
  CLI::App* exact_cmd = app.add_subcommand(
      "exact", "closed-form solution of the configured dataset");
  exact_cmd->add_option("--config", exact_config_path, "config file path");
  exact_cmd->add_flag("--cross-check", exact_cross_check,
                      "re-solve small instances by an independent route and "
                      "compare correlations");
  exact_cmd->allow_extras();

  std::uint64_t cg_seed = 1;
  int cg_trials = 5;
  bool cg_corrupt = false;
  CLI::App* check_cmd = app.add_subcommand(
      "check-gradients", "finite-difference validation of factor gradients");
  check_cmd->add_option("--seed", cg_seed, "base random seed");
  check_cmd->add_option("--trials", cg_trials, "number of random states");
  check_cmd->add_flag("--corrupt-gradients", cg_corrupt,
                      "perturb one analytic gradient (failure-path test)")
      ->group("");

  std::vector<cca::Index> bench_dims;
  cca::Index bench_k = 8;
  cca::Index bench_block = 100;
  int bench_batches = 50;
  std::uint64_t bench_seed = 1;
  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "per-dimension timing of one full optimizer step");
  bench_cmd->add_option("--dims", bench_dims, "comma-separated dimensions")
      ->delimiter(',')
      ->required();
  bench_cmd->add_option("--k", bench_k, "number of canonical pairs");
  bench_cmd->add_option("--batches", bench_batches, "timed steps per dimension");
  bench_cmd->add_option("--block-size", bench_block, "samples per block");
  bench_cmd->add_option("--seed", bench_seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run_cmd->parsed()) {
      return do_run(run_config_path, run_cmd->remaining());
    }
    if (exact_cmd->parsed()) {
      return do_exact(exact_config_path, exact_cmd->remaining(),
                      exact_cross_check);
    }
    if (check_cmd->parsed()) {
      return do_check_gradients(cg_seed, cg_trials, cg_corrupt);
    }
    if (bench_cmd->parsed()) {
      return do_bench(bench_dims, bench_k, bench_block, bench_batches,
                      bench_seed);
    }
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const cca::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cca::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const cca::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
