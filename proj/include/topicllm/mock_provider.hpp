#pragma once

#include <atomic>
#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "topicllm/llm_gateway.hpp"

namespace topicllm::llm {

/// One canned reply for the ordered script: text, or a failure to raise.
struct ScriptStep {
  std::string text;
  std::optional<FailureKind> failure;

  static ScriptStep reply(std::string text) { return {std::move(text), {}}; }
  static ScriptStep fail(FailureKind kind) { return {{}, kind}; }
};

/// Deterministic offline backend.
///
/// A completion is resolved by the first mode that has an answer:
///   1. ordered script: FIFO queue for the request's stage, then the
///      wildcard queue (stage "");
///   2. keyed script: request fingerprint -> text;
///   3. synthesizer: a pure function of the request.
/// With none of these, it raises kScriptExhausted.
///
/// Embeddings come from exact-text presets, then presets keyed by the label
/// part of "label: description", then a hashed bag-of-words of fixed
/// dimension.
class MockBackend : public Backend {
 public:
  using Synthesizer = std::function<std::string(const CompletionRequest&)>;

  struct KeyedReply {
    std::string text;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
  };

  void enqueue(const std::string& stage, ScriptStep step);
  void enqueue_replies(const std::string& stage,
                       const std::vector<std::string>& texts);
  void set_keyed(const std::string& fingerprint, KeyedReply reply);
  void set_synthesizer(Synthesizer synthesizer);

  void set_embedding_dimension(std::size_t dim);
  void set_embedding_preset(const std::string& text,
                            std::vector<double> vector);

  /// Artificial per-call latency, to make concurrency observable in tests.
  void set_latency(std::chrono::milliseconds latency);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(
      const std::string& model, const std::vector<std::string>& texts) override;

  std::vector<CompletionRequest> requests() const;
  std::size_t pending(const std::string& stage) const;
  std::size_t peak_inflight() const noexcept { return peak_inflight_.load(); }

 private:
  std::vector<double> embed_one(const std::string& text) const;

  mutable std::mutex mu_;
  std::map<std::string, std::deque<ScriptStep>> queues_;
  std::map<std::string, KeyedReply> keyed_;
  Synthesizer synthesizer_;
  std::size_t dim_ = 64;
  std::map<std::string, std::vector<double>> presets_;
  std::vector<CompletionRequest> log_;
  std::chrono::milliseconds latency_{0};

  std::atomic<std::size_t> inflight_{0};
  std::atomic<std::size_t> peak_inflight_{0};
};

/// L2-normalized signed feature hashing of lowercase alphanumeric tokens.
std::vector<double> hashed_bag_of_words(const std::string& text,
                                        std::size_t dim);

/// Heuristic responder that understands every pipeline stage's prompt
/// context. It picks keywords by frequency, so a corpus whose classes have
/// distinctive vocabulary yields sensible topics, assignments with verbatim
/// quotes, and grounded subtopics.
MockBackend::Synthesizer make_pipeline_synthesizer();

/// Most frequent lowercase word of at least five letters that is neither a
/// stopword nor in `exclude`; ties go to the earliest occurrence.
std::string dominant_keyword(const std::string& text,
                             const std::vector<std::string>& exclude = {});

}  // namespace topicllm::llm
