#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "resilex/toycore/isa.hpp"

namespace resilex::toycore {

/// Matrix dimension of the matmul benchmarks.
inline constexpr unsigned kMatDim = 8;

/// Input matrices used by matmul and matmul_abft (row-major kMatDim²).
std::vector<std::uint32_t> matmul_input_a();
std::vector<std::uint32_t> matmul_input_b();

/// Plain 8x8 integer matrix product; outputs C row-major.
ToyProgram matmul_program();
/// Same product with a full row/column checksum (Huang-Abraham). A single
/// corrupted element is corrected; other mismatches store to the detection
/// port. Outputs the 8x8 product like matmul.
ToyProgram matmul_abft_program();
/// Dot product of two 128-element vectors; outputs every 32-element partial sum.
ToyProgram dotprod_program();
/// Insertion sort of 32 words; outputs the sorted array and its sum.
ToyProgram checksum_sort_program();
/// Counts and reports positions of a 4-word pattern in a 128-word text.
ToyProgram strsearch_program();
/// xorshift-style hash over 64 words; outputs the running hash every 8 words.
ToyProgram crc_program();
/// First 40 Fibonacci numbers mod 2^32.
ToyProgram fib_program();
/// In-place prefix sum over 64 words; outputs the result.
ToyProgram prefix_sum_program();

/// All bundled benchmarks, in a fixed order.
std::vector<ToyProgram> bundled_programs();
std::vector<std::string> bundled_program_names();
/// Throws std::invalid_argument naming the available benchmarks.
ToyProgram bundled_program(const std::string& name);

}  // namespace resilex::toycore
