#include "topicllm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "topicllm/errors.hpp"
#include "topicllm/kernels.hpp"

namespace topicllm {

double expected_zero_cells(std::uint64_t draws, std::uint64_t cells) {
  if (cells == 0) return 0.0;
  if (cells == 1) return 0.0;
  const double k = static_cast<double>(cells);
  const double n = static_cast<double>(draws);
  return std::exp(std::log(k) + n * std::log1p(-1.0 / k));
}

double min_empty_probability(std::uint64_t draws, std::uint64_t cells,
                             std::uint64_t trials, std::uint64_t seed) {
  if (trials == 0) throw DataError("trials must be at least 1");
  if (cells == 0) throw DataError("cell count must be at least 1");
  auto hits =
      kernels::parallel::count_trials_with_empty_cell(draws, cells, trials, seed);
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double monte_carlo_stderr(double p, std::uint64_t trials) {
  if (trials == 0) return 0.0;
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

namespace {

void validate(std::uint64_t corpus_size, std::uint64_t min_topic_docs,
              const SampleSearch& search) {
  std::vector<std::string> problems;
  if (min_topic_docs < 1) problems.push_back("min_topic_docs must be >= 1");
  if (min_topic_docs > corpus_size) {
    problems.push_back("min_topic_docs must not exceed the corpus size");
  }
  if (search.search_max < 1) problems.push_back("search_max must be >= 1");
  if (search.trials < 1) problems.push_back("trials must be >= 1");
  if (!(search.epsilon >= 0.0 && search.epsilon <= 1.0)) {
    problems.push_back("epsilon must lie in [0, 1]");
  }
  if (!problems.empty()) {
    std::string msg = "invalid sample-size request:";
    for (const auto& p : problems) msg += " " + p + ";";
    throw DataError(msg);
  }
}

}  // namespace

SampleSizePlan evaluate_sample_size(std::uint64_t corpus_size,
                                    std::uint64_t min_topic_docs,
                                    std::uint64_t sample_size,
                                    const SampleSearch& search) {
  validate(corpus_size, min_topic_docs, search);
  if (sample_size < 1) throw DataError("sample size must be >= 1");
  SampleSizePlan plan;
  plan.corpus_size = corpus_size;
  plan.min_topic_docs = min_topic_docs;
  plan.topic_upper_bound = corpus_size / min_topic_docs;
  plan.sample_size = sample_size;
  plan.epsilon = search.epsilon;
  plan.trials = search.trials;
  plan.p_empty = min_empty_probability(sample_size, plan.topic_upper_bound,
                                       search.trials, search.seed);
  plan.p_star = std::abs(plan.p_empty - search.epsilon);
  plan.expected_zero_cells =
      expected_zero_cells(sample_size, plan.topic_upper_bound);
  return plan;
}

SampleSizePlan recommend_sample_size(std::uint64_t corpus_size,
                                     std::uint64_t min_topic_docs,
                                     const SampleSearch& search) {
  validate(corpus_size, min_topic_docs, search);
  const std::uint64_t cells = corpus_size / min_topic_docs;
  const std::uint64_t hi_bound = search.search_max;

  auto p_empty = [&](std::uint64_t n) {
    return min_empty_probability(n, cells, search.trials, search.seed);
  };

  // Coarse grid over [1, search_max].
  const std::uint64_t step = std::max<std::uint64_t>(1, hi_bound / 64);
  std::vector<std::uint64_t> grid;
  for (std::uint64_t n = 1; n <= hi_bound; n += step) grid.push_back(n);
  if (grid.back() != hi_bound) grid.push_back(hi_bound);

  // First grid point at or below epsilon brackets the crossing.
  std::uint64_t lo = grid.front();
  std::uint64_t hi = grid.back();
  bool crossed = false;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (p_empty(grid[i]) <= search.epsilon) {
      hi = grid[i];
      lo = i == 0 ? grid[i] : grid[i - 1];
      crossed = true;
      break;
    }
  }

  std::uint64_t best;
  if (!crossed) {
    best = hi_bound;  // P stays above epsilon; the largest sample is closest.
  } else {
    // Smallest n in (lo, hi] with P(n) <= epsilon.
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (p_empty(mid) <= search.epsilon) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    best = hi;
    // The last point above epsilon may sit closer to it.
    if (hi > 1 && hi != grid.front()) {
      const std::uint64_t below = hi - 1;
      const double d_below = std::abs(p_empty(below) - search.epsilon);
      const double d_hi = std::abs(p_empty(hi) - search.epsilon);
      if (d_below <= d_hi) best = below;
    }
  }
  return evaluate_sample_size(corpus_size, min_topic_docs, best, search);
}

DroughtStep drought_update(DroughtState state,
                           std::size_t new_topics_in_response) {
  if (new_topics_in_response > 0) {
    state.docs_since_new_topic = 0;
  } else {
    ++state.docs_since_new_topic;
  }
  return {state, state.docs_since_new_topic >= state.threshold};
}

}  // namespace topicllm
