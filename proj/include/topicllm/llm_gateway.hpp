#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "topicllm/corpus.hpp"
#include "topicllm/errors.hpp"

namespace topicllm::llm {

enum class FailureKind {
  kTransient,       // network, 429, 5xx: retried
  kAuth,            // terminal
  kContextLength,   // terminal, caller may truncate and resubmit
  kBadRequest,      // terminal
  kRetryExhausted,  // terminal, raised by the gateway
  kScriptExhausted, // terminal, mock has nothing left to say
};

const char* to_string(FailureKind kind);

class ProviderError : public Error {
 public:
  ProviderError(FailureKind kind, const std::string& message)
      : Error(ErrorCategory::kProvider, message), kind_(kind) {}

  FailureKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return kind_ == FailureKind::kTransient; }

 private:
  FailureKind kind_;
};

struct CompletionRequest {
  /// Pipeline stage issuing the call ("generation", "assignment", ...). Used
  /// for per-stage usage and for per-stage mock scripts; never sent upstream.
  std::string stage;
  std::string model;
  std::string prompt;
  int max_tokens = 300;
  double temperature = 0.0;
  double top_p = 0.0;
  /// Values substituted into the prompt template, exposed to mock providers.
  /// Not part of the request fingerprint.
  std::map<std::string, std::string> context;
};

/// Hex SHA-256 of the canonical JSON of model, prompt and decoding params.
std::string request_fingerprint(const CompletionRequest& request);

struct UsageRecord {
  std::uint64_t prompt_tokens = 0;
  std::uint64_t completion_tokens = 0;
  std::uint64_t request_count = 0;
  double estimated_cost = 0.0;

  UsageRecord& operator+=(const UsageRecord& other);
  friend bool operator==(const UsageRecord&, const UsageRecord&) = default;
};

struct CompletionResponse {
  std::string text;
  UsageRecord usage;
  std::map<std::string, std::string> provider_meta;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model;
};

/// Dollar rates per 1000 tokens.
struct ModelRate {
  double prompt_per_1k = 0.0;
  double completion_per_1k = 0.0;
};

class RateTable {
 public:
  void set(std::string model, ModelRate rate);
  /// Unknown models cost nothing.
  double cost(const std::string& model, std::uint64_t prompt_tokens,
              std::uint64_t completion_tokens) const;
  const std::map<std::string, ModelRate>& rates() const { return rates_; }

 private:
  std::map<std::string, ModelRate> rates_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  std::chrono::milliseconds delay_before(int attempt) const;
};

struct GatewayOptions {
  RetryPolicy retry;
  std::size_t max_inflight = 4;
  /// Minimum spacing between request starts; zero disables pacing.
  std::chrono::milliseconds min_interval{0};
  RateTable rates;
  /// Used when a backend does not report token counts.
  TokenEstimator estimator;
};

/// A transport that performs a single attempt. Throws ProviderError.
class Backend {
 public:
  virtual ~Backend() = default;

  /// Implementations fill `usage.prompt_tokens` / `completion_tokens` when
  /// they know them; zero means "estimate for me".
  virtual CompletionResponse complete(const CompletionRequest& request) = 0;
  virtual std::vector<EmbeddingVector> embed(
      const std::string& model, const std::vector<std::string>& texts) = 0;
};

/// Thread-safe provider handle: retry with exponential backoff, a bounded
/// number of in-flight requests, request pacing, and usage accounting.
class Provider {
 public:
  explicit Provider(std::shared_ptr<Backend> backend,
                    GatewayOptions options = {});

  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  CompletionResponse complete(const CompletionRequest& request);

  /// One vector per input, in order. Throws DataError on empty input and
  /// ProviderError on inconsistent dimensions.
  std::vector<EmbeddingVector> embed(const std::string& model,
                                     const std::vector<std::string>& texts,
                                     const std::string& stage = "embedding");

  UsageRecord usage_report() const;
  std::map<std::string, UsageRecord> usage_by_stage() const;

  std::size_t max_inflight() const noexcept { return options_.max_inflight; }
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  class Slot;

  template <typename Attempt>
  auto with_retries(const std::string& what, Attempt&& attempt)
      -> decltype(attempt());

  void acquire();
  void release();
  void record(const std::string& stage, const UsageRecord& usage);

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;

  mutable std::mutex usage_mu_;
  UsageRecord total_;
  std::map<std::string, UsageRecord> by_stage_;

  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  std::size_t inflight_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

}  // namespace topicllm::llm
