#include "topicllm/llm_gateway.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <thread>

#include "topicllm/text.hpp"

namespace topicllm::llm {

const char* to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::kTransient: return "transient";
    case FailureKind::kAuth: return "auth";
    case FailureKind::kContextLength: return "context_length";
    case FailureKind::kBadRequest: return "bad_request";
    case FailureKind::kRetryExhausted: return "retry_exhausted";
    case FailureKind::kScriptExhausted: return "script_exhausted";
  }
  return "unknown";
}

std::string request_fingerprint(const CompletionRequest& request) {
  // nlohmann::json objects serialize with sorted keys.
  nlohmann::json canonical = {
      {"model", request.model},
      {"prompt", request.prompt},
      {"max_tokens", request.max_tokens},
      {"temperature", request.temperature},
      {"top_p", request.top_p},
  };
  return text::sha256_hex(canonical.dump());
}

UsageRecord& UsageRecord::operator+=(const UsageRecord& other) {
  prompt_tokens += other.prompt_tokens;
  completion_tokens += other.completion_tokens;
  request_count += other.request_count;
  estimated_cost += other.estimated_cost;
  return *this;
}

void RateTable::set(std::string model, ModelRate rate) {
  rates_[std::move(model)] = rate;
}

double RateTable::cost(const std::string& model, std::uint64_t prompt_tokens,
                       std::uint64_t completion_tokens) const {
  auto it = rates_.find(model);
  if (it == rates_.end()) return 0.0;
  return (static_cast<double>(prompt_tokens) * it->second.prompt_per_1k +
          static_cast<double>(completion_tokens) *
              it->second.completion_per_1k) /
         1000.0;
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  // attempt is the 1-based index of the attempt about to run (>= 2).
  double ms = static_cast<double>(initial_backoff.count()) *
              std::pow(multiplier, std::max(0, attempt - 2));
  ms = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(ms));
}

Provider::Provider(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (!backend_) throw ConfigError("provider requires a backend");
  if (options_.max_inflight == 0) options_.max_inflight = 1;
  if (options_.retry.max_attempts < 1) options_.retry.max_attempts = 1;
}

void Provider::acquire() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return inflight_ < options_.max_inflight; });
  ++inflight_;
  if (options_.min_interval.count() > 0) {
    auto now = std::chrono::steady_clock::now();
    auto start = std::max(now, next_start_);
    next_start_ = start + options_.min_interval;
    lock.unlock();
    std::this_thread::sleep_until(start);
  }
}

void Provider::release() {
  {
    std::lock_guard lock(slot_mu_);
    --inflight_;
  }
  slot_cv_.notify_one();
}

class Provider::Slot {
 public:
  explicit Slot(Provider& p) : p_(p) { p_.acquire(); }
  ~Slot() { p_.release(); }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  Provider& p_;
};

void Provider::record(const std::string& stage, const UsageRecord& usage) {
  std::lock_guard lock(usage_mu_);
  total_ += usage;
  by_stage_[stage] += usage;
}

template <typename Attempt>
auto Provider::with_retries(const std::string& what, Attempt&& attempt)
    -> decltype(attempt()) {
  const auto& policy = options_.retry;
  for (int n = 1;; ++n) {
    if (n > 1) std::this_thread::sleep_for(policy.delay_before(n));
    try {
      Slot slot(*this);
      return attempt();
    } catch (const ProviderError& e) {
      if (!e.retryable()) throw;
      if (n >= policy.max_attempts) {
        throw ProviderError(FailureKind::kRetryExhausted,
                            what + ": retry budget exhausted after " +
                                std::to_string(n) +
                                " attempts: " + e.what());
      }
      spdlog::warn("{}: attempt {} failed ({}), retrying", what, n, e.what());
    }
  }
}

CompletionResponse Provider::complete(const CompletionRequest& request) {
  const std::string stage = request.stage.empty() ? "default" : request.stage;
  return with_retries("completion", [&] {
    UsageRecord attempt_usage;
    attempt_usage.request_count = 1;
    CompletionResponse response;
    try {
      response = backend_->complete(request);
    } catch (...) {
      record(stage, attempt_usage);
      throw;
    }
    auto& u = response.usage;
    if (u.prompt_tokens == 0) {
      u.prompt_tokens = options_.estimator.estimate(request.prompt);
    }
    if (u.completion_tokens == 0) {
      u.completion_tokens = options_.estimator.estimate(response.text);
    }
    u.request_count = 1;
    u.estimated_cost = options_.rates.cost(request.model, u.prompt_tokens,
                                           u.completion_tokens);
    record(stage, u);
    return response;
  });
}

std::vector<EmbeddingVector> Provider::embed(
    const std::string& model, const std::vector<std::string>& texts,
    const std::string& stage) {
  if (texts.empty()) throw DataError("embed requires at least one text");
  auto vectors = with_retries("embedding", [&] {
    UsageRecord attempt_usage;
    attempt_usage.request_count = 1;
    std::vector<EmbeddingVector> out;
    try {
      out = backend_->embed(model, texts);
    } catch (...) {
      record(stage, attempt_usage);
      throw;
    }
    for (const auto& t : texts) {
      attempt_usage.prompt_tokens += options_.estimator.estimate(t);
    }
    attempt_usage.estimated_cost =
        options_.rates.cost(model, attempt_usage.prompt_tokens, 0);
    record(stage, attempt_usage);
    return out;
  });
  if (vectors.size() != texts.size()) {
    throw ProviderError(FailureKind::kBadRequest,
                        "embedding count does not match input count");
  }
  const auto dim = vectors.front().values.size();
  for (auto& v : vectors) {
    if (v.values.size() != dim || dim == 0) {
      throw ProviderError(FailureKind::kBadRequest,
                          "inconsistent embedding dimensionality");
    }
    if (!std::all_of(v.values.begin(), v.values.end(),
                     [](double x) { return std::isfinite(x); })) {
      throw ProviderError(FailureKind::kBadRequest,
                          "embedding contains non-finite values");
    }
    if (v.model.empty()) v.model = model;
  }
  return vectors;
}

UsageRecord Provider::usage_report() const {
  std::lock_guard lock(usage_mu_);
  return total_;
}

std::map<std::string, UsageRecord> Provider::usage_by_stage() const {
  std::lock_guard lock(usage_mu_);
  return by_stage_;
}

}  // namespace topicllm::llm
