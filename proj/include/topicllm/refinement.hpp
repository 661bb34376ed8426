#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "topicllm/llm_gateway.hpp"
#include "topicllm/prompts.hpp"
#include "topicllm/topics.hpp"

namespace topicllm {

struct SimilarPair {
  std::string first;
  std::string second;
  double cosine = 0.0;
};

/// Replaces `sources` (two or more existing labels) with `merged`.
struct MergeDirective {
  Topic merged;
  std::vector<std::string> sources;
};

struct RejectedDirective {
  std::string line;
  std::string reason;
};

/// Old label -> surviving label. Kept transitively closed.
using RelabelMap = std::map<std::string, std::string>;

/// Marker used in relabel files for topics dropped by pruning.
inline constexpr const char* kRemoved = "REMOVED";

/// Embeds "label: description" for every topic and returns all same-level
/// unordered pairs with cosine >= threshold, highest cosine first (ties keep
/// list order).
std::vector<SimilarPair> similar_pairs(const TopicList& topics,
                                       llm::Provider& provider,
                                       const std::string& embedding_model,
                                       double threshold = 0.5);

/// Parses one merge response. Lines look like
/// "[1] New: Description ([1] Source A, [1] Source B)". "None" yields nothing.
/// Lines whose sources are unknown, span levels, or number fewer than two are
/// rejected. Throws FormatError when nothing parses and the text is not
/// "None".
std::vector<MergeDirective> parse_merge_response(
    const std::string& response, const TopicList& topics,
    std::vector<RejectedDirective>* rejected = nullptr);

struct MergeRoundConfig {
  std::string model = "gpt-4";
  PromptTemplate prompt = prompts::refinement();
  std::size_t batch_size = 5;
  int max_tokens = 300;
};

struct MergeRoundResult {
  std::vector<MergeDirective> directives;
  std::vector<RejectedDirective> rejected;
  std::size_t batches = 0;
};

/// Chunks the pairs into batches and prompts once per batch with the topics
/// those pairs mention. Batches run concurrently up to the provider's
/// in-flight limit; directives come back in batch order.
MergeRoundResult merge_round(const std::vector<SimilarPair>& pairs,
                             const TopicList& topics, llm::Provider& provider,
                             const MergeRoundConfig& config);

struct MergeOutcome {
  TopicList topics;
  RelabelMap relabel;
};

/// Applies directives in order. Sources already merged are followed to their
/// current topic, so chained directives resolve transitively. A merged topic
/// takes the position of its first source, the level of its sources and the
/// sum of their counts.
MergeOutcome apply_merges(const TopicList& topics,
                          const std::vector<MergeDirective>& directives);

/// Drops topics with count < threshold. Seeds are not exempt. Throws
/// DataError if nothing survives.
TopicList prune_infrequent(const TopicList& topics, std::size_t threshold);

/// Total map from every label in `original` to its surviving label in
/// `final_topics`, or kRemoved.
RelabelMap complete_relabel(const TopicList& original,
                            const RelabelMap& merges,
                            const TopicList& final_topics);

struct RefinementConfig {
  std::string embedding_model = "all-MiniLM-L6-v2";
  double similarity_threshold = 0.5;
  MergeRoundConfig merge;
  std::size_t prune_threshold = 10;
  std::size_t iterations = 1;
};

struct RefinementResult {
  TopicList topics;
  /// Total map over the input labels.
  RelabelMap relabel;
  std::vector<SimilarPair> pairs;  // all rounds
  std::vector<MergeDirective> directives;
  std::vector<RejectedDirective> rejected;
};

/// Pairing, merging, then pruning. Pairing and merging repeat
/// `iterations` times, stopping early when a round changes nothing.
RefinementResult refine(const TopicList& topics, llm::Provider& provider,
                        const RefinementConfig& config);

/// Two tab-separated columns per line: old label, new label or REMOVED.
void write_relabel_map(const RelabelMap& map, std::ostream& out);
void write_relabel_map(const RelabelMap& map,
                       const std::filesystem::path& path);
RelabelMap read_relabel_map(const std::filesystem::path& path);

}  // namespace topicllm
