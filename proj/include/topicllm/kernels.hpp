#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// `kernels::serial` and an OpenMP version in `kernels::parallel`; the two
// return bit-identical results for the same inputs, which the unit tests and
// the kernel benchmark both rely on.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace topicllm::kernels {

/// Monte Carlo trials are split into fixed blocks of this many trials. Block b
/// draws from its own generator seeded by (seed, b), so the total count does
/// not depend on thread count or scheduling.
inline constexpr std::size_t kTrialBlock = 256;

/// Dense row-major matrix of embedding rows.
struct RowMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

namespace serial {

/// Number of trials (out of `trials`) in which throwing `draws` balls
/// uniformly into `cells` cells leaves at least one cell empty.
std::uint64_t count_trials_with_empty_cell(std::uint64_t draws,
                                           std::uint64_t cells,
                                           std::uint64_t trials,
                                           std::uint64_t seed);

/// Full n x n cosine-similarity matrix of the rows. Zero rows have cosine 0
/// with everything, including themselves.
std::vector<double> cosine_matrix(const RowMatrix& rows);

}  // namespace serial

namespace parallel {

std::uint64_t count_trials_with_empty_cell(std::uint64_t draws,
                                           std::uint64_t cells,
                                           std::uint64_t trials,
                                           std::uint64_t seed);

std::vector<double> cosine_matrix(const RowMatrix& rows);

}  // namespace parallel

}  // namespace topicllm::kernels
