#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "topicllm/corpus.hpp"
#include "topicllm/llm_gateway.hpp"
#include "topicllm/prompts.hpp"
#include "topicllm/topics.hpp"

namespace topicllm {

enum class AssignmentMode { kSingle, kMulti };

struct AssignmentEntry {
  std::string label;
  std::string description;
  std::string quote;
  /// Labels from the top level down to `label` when the model answered with
  /// a hierarchy path; just `label` otherwise.
  std::vector<std::string> path;

  friend bool operator==(const AssignmentEntry&,
                         const AssignmentEntry&) = default;
};

struct Assignment {
  std::string doc_id;
  std::vector<AssignmentEntry> entries;
  int attempts = 1;
  std::string raw_response;
};

enum class AssignmentErrorKind {
  kHallucination,
  kInvalidResponse,
  kFormatError,
  kQuoteNotFound,
  kRetryExhausted,
};

const char* to_string(AssignmentErrorKind kind);

struct AssignmentError {
  AssignmentErrorKind kind;
  std::string detail;

  bool retryable() const noexcept {
    return kind != AssignmentErrorKind::kRetryExhausted;
  }
};

using ParsedAssignment = std::variant<std::vector<AssignmentEntry>, AssignmentError>;

/// Quote check: the quote, with leading/trailing "..." or "…" removed and
/// whitespace collapsed, must occur case-sensitively in the whitespace-
/// collapsed document. Internal ellipses split the quote into fragments that
/// must occur in order.
bool verify_quote(std::string_view quote, std::string_view document);

/// Prompt with every topic, the few-shot examples and the document. Single
/// mode adds an instruction to return exactly one topic; `correction` is the
/// retry note naming the previous error (empty on the first attempt).
std::string render_assignment_prompt(const TopicList& topics,
                                     const Document& doc, AssignmentMode mode,
                                     const PromptTemplate& tmpl,
                                     const std::string& correction = "");

/// Parses `[<level>] <Label>: <description> ("<quote>")` lines. A bare
/// `[<level>] <Label>` line opens a hierarchy path for the indented lines
/// below it; each entry is flattened to its deepest label.
ParsedAssignment parse_assignment_response(const std::string& response,
                                           const TopicList& topics,
                                           const Document& doc);

struct AssignmentConfig {
  std::string model = "gpt-3.5-turbo";
  PromptTemplate prompt = prompts::assignment();
  AssignmentMode mode = AssignmentMode::kSingle;
  int retry_limit = 10;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_doc_tokens = 3500;
  TokenEstimator estimator;
  int max_tokens = 300;
};

struct AttemptRecord {
  std::vector<std::string> topic_order;
  std::optional<AssignmentError> error;
  std::string raw_response;
};

struct AssignmentOutcome {
  std::optional<Assignment> assignment;
  /// Set when every attempt failed; kind is kRetryExhausted.
  std::optional<AssignmentError> error;
  int attempts = 0;
  std::vector<AttemptRecord> history;
};

/// Seed for the topic shuffle of one attempt, derived from
/// (global seed, doc id, attempt index).
std::uint64_t shuffle_seed(std::uint64_t seed, const std::string& doc_id,
                           int attempt);

/// Topic order for the given attempt. Attempt 1 keeps list order; later
/// attempts are seeded shuffles.
TopicList order_for_attempt(const TopicList& topics, std::uint64_t seed,
                            const std::string& doc_id, int attempt);

/// Prompts, parses and, on a retryable error, re-prompts with the error
/// stated and the topic list reshuffled, up to `retry_limit` attempts.
/// Provider errors other than a context-length rejection propagate; a
/// context-length rejection halves the document budget and retries without
/// spending an attempt.
AssignmentOutcome assign_with_correction(const Document& doc,
                                         const TopicList& topics,
                                         llm::Provider& provider,
                                         const AssignmentConfig& config);

struct AssignmentReport {
  std::size_t assigned = 0;
  /// Documents that exhausted their retries, by id.
  std::vector<std::string> failed_ids;
  /// Terminal failures by kind (only kRetryExhausted today).
  std::map<std::string, std::size_t> failures;
  /// Every retryable error seen on any attempt, by kind.
  std::map<std::string, std::size_t> retries;
};

struct CorpusAssignment {
  std::vector<Assignment> assignments;  // sorted by doc id
  AssignmentReport report;
};

/// Runs assign_with_correction for every document, concurrently up to the
/// provider's in-flight limit. Throws DataError on an empty topic list
/// before any request is made.
CorpusAssignment assign_corpus(const Corpus& docs, const TopicList& topics,
                               llm::Provider& provider,
                               const AssignmentConfig& config);

/// One record per line: {"id","topics":[{"label","description","quote"}],
/// "attempts"}, then a {"summary": ...} record.
void write_assignments(const CorpusAssignment& result, std::ostream& out);
void write_assignments(const CorpusAssignment& result,
                       const std::filesystem::path& path);
/// Reads the records and ignores the summary.
std::vector<Assignment> read_assignments(const std::filesystem::path& path);
std::vector<Assignment> parse_assignments(std::istream& in,
                                          const std::string& source);

}  // namespace topicllm
