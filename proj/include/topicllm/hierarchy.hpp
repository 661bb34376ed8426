#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "topicllm/assignment.hpp"
#include "topicllm/corpus.hpp"
#include "topicllm/llm_gateway.hpp"
#include "topicllm/prompts.hpp"
#include "topicllm/refinement.hpp"
#include "topicllm/topics.hpp"

namespace topicllm {

struct Subtopic {
  Topic topic;  // level 2; count = number of supporting documents
  std::vector<std::string> doc_ids;
};

/// A top-level topic with its subtopics and the documents assigned to it.
struct TopicBranch {
  Topic parent;
  std::vector<Topic> seed_subtopics;
  std::vector<Subtopic> subtopics;
  std::vector<std::string> doc_ids;  // documents assigned to the parent
};

struct RejectedSubtopic {
  std::string line;
  std::string reason;
};

/// label -> doc ids, in assignment order. A multi-label document appears
/// under each of its labels.
std::map<std::string, std::vector<std::string>> group_docs_by_topic(
    const std::vector<Assignment>& assignments);

/// Greedy in-order packing of documents into chunks whose token estimates sum
/// to at most `budget`. Returns index ranges into `docs`. A document larger
/// than the budget gets a chunk of its own.
std::vector<std::vector<std::size_t>> pack_chunks(
    const std::vector<Document>& docs, std::size_t budget,
    const TokenEstimator& estimator);

/// Parses "[2] <Label> (Document: <i>, <j>): <Description>" lines against a
/// chunk of `chunk_size` documents. Cited indices outside [1, chunk_size]
/// reject the subtopic (GroundingError semantics); so does a missing
/// citation. Parent lines are ignored. Throws FormatError when nothing in a
/// non-empty response parses.
struct ParsedSubtopic {
  Topic topic;
  std::vector<std::size_t> doc_indices;  // 1-based within the chunk
};
std::vector<ParsedSubtopic> parse_subtopic_response(
    const std::string& response, std::size_t chunk_size,
    std::vector<RejectedSubtopic>* rejected = nullptr);

struct HierarchyConfig {
  std::string model = "gpt-4";
  PromptTemplate prompt = prompts::subtopics();
  std::size_t chunk_budget = 6000;
  std::optional<std::size_t> max_doc_tokens = 2000;
  TokenEstimator estimator;
  int max_tokens = 300;
  /// Optional per-branch merge/prune, with counts = grounding-set sizes.
  std::optional<RefinementConfig> refinement;
};

struct SubtopicResult {
  TopicBranch branch;
  std::vector<RejectedSubtopic> rejected;
  std::size_t chunks = 0;
};

/// Prompts chunk by chunk, each prompt carrying the subtopics found so far.
/// Every subtopic keeps only the document ids it was grounded in, which are
/// checked to belong to `docs`.
SubtopicResult generate_subtopics(const TopicBranch& branch,
                                  const std::vector<Document>& docs,
                                  llm::Provider& provider,
                                  const HierarchyConfig& config);

struct HierarchyResult {
  std::vector<TopicBranch> branches;
  std::vector<RejectedSubtopic> rejected;
};

/// One branch per top-level topic that has assigned documents, in topic-list
/// order. Branches run concurrently.
HierarchyResult build_hierarchy(
    const TopicList& top_level, const std::vector<Assignment>& assignments,
    const Corpus& corpus, llm::Provider& provider,
    const HierarchyConfig& config,
    const std::map<std::string, std::vector<Topic>>& seed_subtopics = {});

/// Parent line "[1] Label (Count: n): Description" followed by indented
/// "  [2] Label: Description (docs: id, id)" lines.
void write_hierarchy(const std::vector<TopicBranch>& branches,
                     std::ostream& out);
void write_hierarchy(const std::vector<TopicBranch>& branches,
                     const std::filesystem::path& path);
std::vector<TopicBranch> read_hierarchy(const std::filesystem::path& path);

}  // namespace topicllm
