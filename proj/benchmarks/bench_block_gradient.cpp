// Standalone benchmark: serial reference vs OpenMP block-gradient kernel
// across a sweep of view dimensions.  The parallel path must reproduce the
// serial result bit for bit; any divergence fails the benchmark.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "cca/runner.hpp"
#include "cca/types.hpp"

int main(int argc, char** argv) {
  cca::Index k = 8;
  cca::Index block_size = 1024;
  int reps = 5;
  std::vector<cca::Index> dims = {128, 256, 512, 1024};

  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto next = [&](const char* name) -> long {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << name << "\n";
        std::exit(2);
      }
      return std::atol(argv[++i]);
    };
    if (arg == "--k") {
      k = next("--k");
    } else if (arg == "--block-size") {
      block_size = next("--block-size");
    } else if (arg == "--reps") {
      reps = static_cast<int>(next("--reps"));
    } else if (arg == "--help" || arg == "-h") {
      std::cout << "usage: bench_block_gradient [--k N] [--block-size N] "
                   "[--reps N]\n";
      return 0;
    } else {
      std::cerr << "unknown argument '" << arg << "'\n";
      return 2;
    }
  }

  bool all_identical = true;
  std::cout << "block gradient kernel, block=" << block_size << " k=" << k
            << " reps=" << reps << "\n";
  std::cout << "    d    threads   serial(ms)  parallel(ms)   speedup  identical\n";
  for (cca::Index d : dims) {
    try {
      const cca::BenchResult r =
          cca::benchmark_pca_gradient(d, k, block_size, reps, 1);
      const double speedup = r.parallel_ms > 0.0 ? r.serial_ms / r.parallel_ms : 0.0;
      std::printf("  %5ld  %7d  %10.3f  %11.3f  %7.2fx  %s\n",
                  static_cast<long>(d), r.threads, r.serial_ms, r.parallel_ms,
                  speedup, r.identical ? "yes" : "NO");
      all_identical = all_identical && r.identical;
    } catch (const cca::Error& e) {
      std::cerr << "benchmark failed at d=" << d << ": " << e.what() << "\n";
      return 1;
    }
  }
  if (!all_identical) {
    std::cerr << "parallel kernel diverged from the serial reference\n";
    return 1;
  }
  return 0;
}
