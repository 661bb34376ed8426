#include "topicllm/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace topicllm::kernels {

namespace {

std::mt19937_64 block_rng(std::uint64_t seed, std::uint64_t block) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(block),
                    static_cast<std::uint32_t>(block >> 32)};
  return std::mt19937_64(seq);
}

// Runs one block of trials. `filled` is scratch space of size `cells`.
std::uint64_t run_block(std::uint64_t draws, std::uint64_t cells,
                        std::uint64_t first, std::uint64_t last,
                        std::uint64_t seed, std::vector<std::uint32_t>& stamp) {
  auto rng = block_rng(seed, first / kTrialBlock);
  std::uniform_int_distribution<std::uint64_t> cell(0, cells - 1);
  std::uint64_t empty_trials = 0;
  for (std::uint64_t t = first; t < last; ++t) {
    // stamp[c] == tag marks cell c as occupied in this trial.
    const auto tag = static_cast<std::uint32_t>(t - first + 1);
    std::uint64_t occupied = 0;
    for (std::uint64_t d = 0; d < draws; ++d) {
      auto c = cell(rng);
      if (stamp[c] != tag) {
        stamp[c] = tag;
        if (++occupied == cells) break;
      }
      // Not enough draws left to reach every cell.
      if (draws - d - 1 < cells - occupied) break;
    }
    if (occupied < cells) ++empty_trials;
  }
  std::fill(stamp.begin(), stamp.end(), 0u);
  return empty_trials;
}

std::vector<double> row_norms(const RowMatrix& m) {
  std::vector<double> norms(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    double s = 0.0;
    for (double v : m.row(r)) s += v * v;
    norms[r] = std::sqrt(s);
  }
  return norms;
}

double cosine(const RowMatrix& m, const std::vector<double>& norms,
              std::size_t i, std::size_t j) {
  if (norms[i] == 0.0 || norms[j] == 0.0) return 0.0;
  auto a = m.row(i);
  auto b = m.row(j);
  double dot = 0.0;
  for (std::size_t k = 0; k < m.cols; ++k) dot += a[k] * b[k];
  return std::clamp(dot / (norms[i] * norms[j]), -1.0, 1.0);
}

}  // namespace

namespace serial {

std::uint64_t count_trials_with_empty_cell(std::uint64_t draws,
                                           std::uint64_t cells,
                                           std::uint64_t trials,
                                           std::uint64_t seed) {
  if (cells == 0 || trials == 0) return 0;
  std::vector<std::uint32_t> stamp(cells, 0u);
  std::uint64_t total = 0;
  for (std::uint64_t first = 0; first < trials; first += kTrialBlock) {
    total += run_block(draws, cells, first,
                       std::min(trials, first + kTrialBlock), seed, stamp);
  }
  return total;
}

std::vector<double> cosine_matrix(const RowMatrix& rows) {
  const auto n = rows.rows;
  const auto norms = row_norms(rows);
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double c = cosine(rows, norms, i, j);
      out[i * n + j] = c;
      out[j * n + i] = c;
    }
  }
  return out;
}

}  // namespace serial

namespace parallel {

std::uint64_t count_trials_with_empty_cell(std::uint64_t draws,
                                           std::uint64_t cells,
                                           std::uint64_t trials,
                                           std::uint64_t seed) {
  if (cells == 0 || trials == 0) return 0;
  const auto blocks =
      static_cast<std::int64_t>((trials + kTrialBlock - 1) / kTrialBlock);
  std::uint64_t total = 0;
#pragma omp parallel reduction(+ : total)
  {
    std::vector<std::uint32_t> stamp(cells, 0u);
#pragma omp for schedule(dynamic, 1)
    for (std::int64_t b = 0; b < blocks; ++b) {
      const auto first = static_cast<std::uint64_t>(b) * kTrialBlock;
      total += run_block(draws, cells, first,
                         std::min(trials, first + kTrialBlock), seed, stamp);
    }
  }
  return total;
}

std::vector<double> cosine_matrix(const RowMatrix& rows) {
  const auto n = static_cast<std::int64_t>(rows.rows);
  const auto norms = row_norms(rows);
  std::vector<double> out(rows.rows * rows.rows, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i; j < n; ++j) {
      double c = cosine(rows, norms, static_cast<std::size_t>(i),
                        static_cast<std::size_t>(j));
      out[i * n + j] = c;
      out[j * n + i] = c;
    }
  }
  return out;
}

}  // namespace parallel

}  // namespace topicllm::kernels
