#pragma once

#include <cstdint>
#include <string>

#include "cca/exact.hpp"
#include "cca/rsgplus.hpp"
#include "cca/types.hpp"

namespace cca {

// Binary container formats.  All integers and doubles are little-endian;
// matrix payloads are row-major f64.  Readers throw DataError on bad magic,
// truncation, implausible headers, or trailing bytes.
//
//   matrix file:     "CCAM" | u64 rows | u64 cols | payload
//   checkpoint file: "RSG+" | u16 version | u32 d_x | u32 d_y | u32 k |
//                    u64 steps | u_tilde | v_tilde | s_u | s_v | q_u | q_v
//   solution file:   "CCAS" | u16 version | u32 d_x | u32 d_y | u32 k |
//                    correlations (k doubles) | u_star | v_star

inline constexpr std::uint16_t checkpoint_format_version = 1;
inline constexpr std::uint16_t solution_format_version = 1;

void save_matrix(const std::string& path, const Matrix& m);
Matrix load_matrix(const std::string& path);

struct Checkpoint {
  RsgState state;
  std::uint64_t steps_taken = 0;
};

// Checkpoints are validated on load: structural integrity here, manifold
// invariants (orthonormal frames, rotations, triangular factors) as well.
void save_checkpoint(const std::string& path, const RsgState& state,
                     std::uint64_t steps_taken);
Checkpoint load_checkpoint(const std::string& path);

void save_solution(const std::string& path, const CcaSolution& solution);
CcaSolution load_solution(const std::string& path);

// Decimal form with 17 significant digits, enough to round-trip any double;
// used for reproducible CSV output.
std::string format_double(double value);

}  // namespace cca
