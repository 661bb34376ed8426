#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "topicllm/corpus.hpp"
#include "topicllm/llm_gateway.hpp"
#include "topicllm/prompts.hpp"
#include "topicllm/topics.hpp"

namespace topicllm {

struct GenerationRecord {
  std::string doc_id;
  std::string raw_response;
  std::vector<Topic> parsed;
  /// Parallel to `parsed`: true when the topic was appended to the list.
  std::vector<bool> is_new;
  /// Set when the response could not be parsed.
  std::optional<std::string> parse_error;

  std::size_t new_topic_count() const;
};

/// One record per processed document, in processing order.
struct GenerationTrace {
  std::vector<GenerationRecord> records;

  /// Topic-list size after each processed document.
  std::vector<std::size_t> growth_curve(std::size_t seed_count) const;
};

void write_trace(const GenerationTrace& trace, std::ostream& out);
void write_trace(const GenerationTrace& trace,
                 const std::filesystem::path& path);

/// Renders the generation prompt against the current list. Throws DataError
/// when the document text is empty.
std::string render_generation_prompt(const TopicList& topics,
                                     const Document& doc,
                                     const PromptTemplate& tmpl);

/// Parses "[<level>] <Label>: <Description>" lines. A lone "None" yields no
/// topics. Other lines are skipped with a warning, unless none of them
/// parse, which raises FormatError.
std::vector<Topic> parse_generation_response(const std::string& text);

struct GenerationConfig {
  std::string model = "gpt-4";
  PromptTemplate prompt = prompts::generation();
  /// Per-document token budget; nullopt disables truncation.
  std::optional<std::size_t> max_doc_tokens = 7000;
  TokenEstimator estimator;
  /// Stop after this many consecutive documents without a new topic.
  std::optional<std::size_t> drought_threshold;
  int max_tokens = 300;
};

struct GenerationResult {
  TopicList topics;
  GenerationTrace trace;
  bool stopped_early = false;
  /// Terminal provider error that ended the pass; topics and trace hold the
  /// state reached before it.
  std::optional<std::string> aborted;
};

/// Sequential first-level generation loop. Each document is prompted with the
/// list produced by all earlier documents. A returned label matching an
/// existing level-1 topic (case-insensitive) increments that topic's count;
/// a new label is appended with count 1.
GenerationResult generation_pass(const Corpus& sample, const TopicList& seeds,
                                 llm::Provider& provider,
                                 const GenerationConfig& config);

}  // namespace topicllm
