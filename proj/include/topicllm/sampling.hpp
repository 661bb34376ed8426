#pragma once

#include <cstddef>
#include <cstdint>

namespace topicllm {

/// Sample-size recommendation for topic generation.
///
/// A floor of `min_topic_docs` documents on the rarest topic bounds the number
/// of topics by `topic_upper_bound = floor(corpus_size / min_topic_docs)`.
/// Drawing `sample_size` documents is then modelled as a uniform multinomial
/// over that many topics, and `p_star` is the distance between the chance that
/// some topic receives no document and the tolerated miss rate `epsilon`.
struct SampleSizePlan {
  std::uint64_t corpus_size = 0;
  std::uint64_t min_topic_docs = 0;
  std::uint64_t topic_upper_bound = 0;
  std::uint64_t sample_size = 0;
  double epsilon = 0.005;
  double p_star = 0.0;
  /// Monte Carlo estimate of P(min_k c_k = 0) at `sample_size`.
  double p_empty = 0.0;
  double expected_zero_cells = 0.0;
  std::uint64_t trials = 0;
};

/// Expected number of empty cells after `draws` uniform draws into `cells`
/// cells, K (1 - 1/K)^n, evaluated in log space.
double expected_zero_cells(std::uint64_t draws, std::uint64_t cells);

/// Seeded Monte Carlo estimate of P(some cell is empty). Trials run on the
/// OpenMP kernel in fixed blocks, so the result is independent of the thread
/// count.
double min_empty_probability(std::uint64_t draws, std::uint64_t cells,
                             std::uint64_t trials, std::uint64_t seed);

/// Standard error of a Bernoulli proportion estimate.
double monte_carlo_stderr(double p, std::uint64_t trials);

struct SampleSearch {
  double epsilon = 0.005;
  std::uint64_t search_max = 5000;
  std::uint64_t trials = 10'000;
  std::uint64_t seed = 0;
};

/// Plan at a fixed sample size.
SampleSizePlan evaluate_sample_size(std::uint64_t corpus_size,
                                    std::uint64_t min_topic_docs,
                                    std::uint64_t sample_size,
                                    const SampleSearch& search);

/// Smallest n_s in [1, search_max] minimizing p*. The estimate of
/// P(min = 0) is nonincreasing in n_s, so a coarse grid brackets the point
/// where it crosses epsilon and bisection narrows it down. Every evaluation
/// reuses `search.seed`. Throws DataError on invalid bounds.
SampleSizePlan recommend_sample_size(std::uint64_t corpus_size,
                                     std::uint64_t min_topic_docs,
                                     const SampleSearch& search);

/// Consecutive documents that produced no new topic.
struct DroughtState {
  std::size_t docs_since_new_topic = 0;
  std::size_t threshold = 100;
};

struct DroughtStep {
  DroughtState state;
  bool stop = false;
};

DroughtStep drought_update(DroughtState state,
                           std::size_t new_topics_in_response);

}  // namespace topicllm
