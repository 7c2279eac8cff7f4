#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cca/types.hpp"

namespace cca {

// Deterministic standard-normal sampler.
//
// std::normal_distribution is implementation-defined, so two standard
// libraries given the same seed can disagree.  Every reproducibility claim in
// this project rests on bit-identical sample streams, so we fix the algorithm
// ourselves: a Box-Muller transform over the raw mt19937_64 output.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

  // One standard-normal draw.  Box-Muller produces pairs; the spare is cached.
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so std::log(u1) is finite; u2 in [0, 1).
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * pi_ * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Fills a matrix with iid standard normals in row-major element order, so
  // the stream consumed is independent of Eigen's storage order.
  Matrix matrix(Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) {
        out(i, j) = (*this)();
      }
    }
    return out;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64& engine() { return engine_; }

 private:
  static constexpr double pi_ = 3.14159265358979323846;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stateless mixing function used to derive independent sub-seeds from one
// user-facing seed (e.g. data stream vs. initial iterate).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace cca
