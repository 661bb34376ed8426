#include "topicllm/config.hpp"

#include <fstream>
#include <set>

#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

using nlohmann::json;

namespace {

const std::vector<std::string> kStages = {"generation", "refinement",
                                          "assignment", "hierarchy",
                                          "embedding"};

/// Walks one JSON object, copying known keys and noting every problem.
class Reader {
 public:
  Reader(const json& obj, std::string where, std::vector<std::string>& errors)
      : obj_(obj), where_(std::move(where)), errors_(errors) {
    if (!obj_.is_object()) {
      errors_.push_back(where_ + ": expected an object");
      ok_ = false;
    }
  }

  ~Reader() {
    if (!ok_) return;
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.count(key)) errors_.push_back(path(key) + ": unknown key");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!ok_ || !obj_.contains(key)) return;
    const auto& v = obj_.at(key);
    if (!matches<T>(v)) {
      errors_.push_back(path(key) + ": expected " + type_name<T>());
      return;
    }
    out = v.get<T>();
  }

  template <typename T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!ok_ || !obj_.contains(key) || obj_.at(key).is_null()) return;
    const auto& v = obj_.at(key);
    if (!matches<T>(v)) {
      errors_.push_back(path(key) + ": expected " + type_name<T>() + " or null");
      return;
    }
    out = v.get<T>();
  }

  /// Nested object, or nullptr when absent.
  const json* child(const std::string& key) {
    seen_.insert(key);
    if (!ok_ || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

 private:
  template <typename T>
  static bool matches(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v.is_boolean();
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v.is_string();
    } else if constexpr (std::is_floating_point_v<T>) {
      return v.is_number();
    } else if constexpr (std::is_unsigned_v<T>) {
      return v.is_number_unsigned() ||
             (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    } else {
      return v.is_number_integer();
    }
  }

  template <typename T>
  static std::string type_name() {
    if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else if constexpr (std::is_same_v<T, std::string>) return "a string";
    else if constexpr (std::is_floating_point_v<T>) return "a number";
    else if constexpr (std::is_unsigned_v<T>) return "a nonnegative integer";
    else return "an integer";
  }

  const json& obj_;
  std::string where_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

void read_provider(const json& j, ProviderSettings& p,
                   std::vector<std::string>& errors) {
  Reader r(j, "provider", errors);
  r.get("kind", p.kind);
  r.get("base_url", p.base_url);
  r.get("path_prefix", p.path_prefix);
  r.get("api_key_env", p.api_key_env);
  r.get("fixture", p.fixture);
  r.get("record", p.record);
  r.get("timeout_seconds", p.timeout_seconds);
  r.get("max_inflight", p.max_inflight);
  r.get("min_interval_ms", p.min_interval_ms);
  if (const json* retry = r.child("retry")) {
    Reader rr(*retry, "provider.retry", errors);
    int initial = static_cast<int>(p.retry.initial_backoff.count());
    int max_backoff = static_cast<int>(p.retry.max_backoff.count());
    rr.get("max_attempts", p.retry.max_attempts);
    rr.get("initial_backoff_ms", initial);
    rr.get("multiplier", p.retry.multiplier);
    rr.get("max_backoff_ms", max_backoff);
    p.retry.initial_backoff = std::chrono::milliseconds(initial);
    p.retry.max_backoff = std::chrono::milliseconds(max_backoff);
  }
  if (const json* models = r.child("models")) {
    Reader mr(*models, "provider.models", errors);
    for (const auto& stage : kStages) mr.get(stage, p.models[stage]);
  }
  if (const json* rates = r.child("rates")) {
    if (!rates->is_object()) {
      errors.push_back("provider.rates: expected an object");
    } else {
      p.rates.clear();
      for (const auto& [model, rate] : rates->items()) {
        Reader rr(rate, "provider.rates." + model, errors);
        llm::ModelRate m;
        rr.get("prompt_per_1k", m.prompt_per_1k);
        rr.get("completion_per_1k", m.completion_per_1k);
        p.rates[model] = m;
      }
    }
  }
}

}  // namespace

const std::string& PipelineConfig::model(const std::string& stage) const {
  auto it = provider.models.find(stage);
  if (it == provider.models.end() || it->second.empty()) {
    throw ConfigError("no model configured for stage " + stage);
  }
  return it->second;
}

PipelineConfig parse_config(const json& j) {
  PipelineConfig c;
  std::vector<std::string> errors;
  {
    Reader r(j, "config", errors);
    if (const json* p = r.child("provider")) read_provider(*p, c.provider, errors);
    if (const json* g = r.child("generation")) {
      Reader gr(*g, "generation", errors);
      gr.get("seed_topics", c.generation.seed_topics);
      gr.get_optional("drought_threshold", c.generation.drought_threshold);
      gr.get("sample_seed", c.generation.sample_seed);
      gr.get("max_doc_tokens", c.generation.max_doc_tokens);
      gr.get("prompt", c.generation.prompt);
    }
    if (const json* f = r.child("refinement")) {
      Reader fr(*f, "refinement", errors);
      fr.get("similarity_threshold", c.refinement.similarity_threshold);
      fr.get("merge_batch", c.refinement.merge_batch);
      fr.get("prune_threshold", c.refinement.prune_threshold);
      fr.get("iterations", c.refinement.iterations);
      fr.get("prompt", c.refinement.prompt);
    }
    if (const json* a = r.child("assignment")) {
      Reader ar(*a, "assignment", errors);
      std::string mode = "single";
      ar.get("mode", mode);
      if (mode == "single") {
        c.assignment.mode = AssignmentMode::kSingle;
      } else if (mode == "multi") {
        c.assignment.mode = AssignmentMode::kMulti;
      } else {
        errors.push_back("assignment.mode: must be \"single\" or \"multi\", got \"" +
                         mode + "\"");
      }
      ar.get("retry_limit", c.assignment.retry_limit);
      ar.get("seed", c.assignment.seed);
      ar.get("max_doc_tokens", c.assignment.max_doc_tokens);
      ar.get("prompt", c.assignment.prompt);
    }
    if (const json* h = r.child("hierarchy")) {
      Reader hr(*h, "hierarchy", errors);
      hr.get("chunk_budget", c.hierarchy.chunk_budget);
      hr.get("max_doc_tokens", c.hierarchy.max_doc_tokens);
      hr.get("refine", c.hierarchy.refine);
      hr.get("prune_threshold", c.hierarchy.prune_threshold);
      hr.get("prompt", c.hierarchy.prompt);
    }
    r.get("chars_per_token", c.chars_per_token);
  }
  try {
    validate(c);
  } catch (const ConfigError& e) {
    errors.insert(errors.end(), e.violations().begin(), e.violations().end());
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

void validate(const PipelineConfig& c) {
  std::vector<std::string> v;
  const auto& p = c.provider;
  if (p.kind != "mock" && p.kind != "openai" && p.kind != "replay") {
    v.push_back("provider.kind: must be mock, openai or replay, got \"" + p.kind + "\"");
  }
  if (p.kind == "replay" && p.fixture.empty()) {
    v.push_back("provider.fixture: required when provider.kind is replay");
  }
  if (p.kind == "openai" && p.base_url.empty()) {
    v.push_back("provider.base_url: required when provider.kind is openai");
  }
  if (p.api_key_env.empty()) v.push_back("provider.api_key_env: must not be empty");
  if (p.timeout_seconds < 1) v.push_back("provider.timeout_seconds: must be >= 1");
  if (p.max_inflight < 1) v.push_back("provider.max_inflight: must be >= 1");
  if (p.min_interval_ms < 0) v.push_back("provider.min_interval_ms: must be >= 0");
  if (p.retry.max_attempts < 1) v.push_back("provider.retry.max_attempts: must be >= 1");
  if (p.retry.initial_backoff.count() < 0) {
    v.push_back("provider.retry.initial_backoff_ms: must be >= 0");
  }
  if (p.retry.max_backoff < p.retry.initial_backoff) {
    v.push_back("provider.retry.max_backoff_ms: must be >= initial_backoff_ms");
  }
  if (p.retry.multiplier < 1.0) v.push_back("provider.retry.multiplier: must be >= 1");
  for (const auto& stage : kStages) {
    auto it = p.models.find(stage);
    if (it == p.models.end() || it->second.empty()) {
      v.push_back("provider.models." + stage + ": model id required");
    }
  }
  for (const auto& [model, rate] : p.rates) {
    if (rate.prompt_per_1k < 0 || rate.completion_per_1k < 0) {
      v.push_back("provider.rates." + model + ": rates must be >= 0");
    }
  }
  if (c.generation.drought_threshold && *c.generation.drought_threshold < 1) {
    v.push_back("generation.drought_threshold: must be >= 1");
  }
  if (c.refinement.similarity_threshold < -1.0 || c.refinement.similarity_threshold > 1.0) {
    v.push_back("refinement.similarity_threshold: must be within [-1, 1]");
  }
  if (c.refinement.merge_batch < 1) v.push_back("refinement.merge_batch: must be >= 1");
  if (c.refinement.iterations < 1) v.push_back("refinement.iterations: must be >= 1");
  if (c.assignment.retry_limit < 1 || c.assignment.retry_limit > 100) {
    v.push_back("assignment.retry_limit: must be within [1, 100]");
  }
  if (c.hierarchy.chunk_budget < 1) v.push_back("hierarchy.chunk_budget: must be >= 1");
  if (c.chars_per_token < 1) v.push_back("chars_per_token: must be >= 1");
  if (!v.empty()) throw ConfigError(std::move(v));
}

json to_json(const PipelineConfig& c) {
  const auto& p = c.provider;
  json rates = json::object();
  for (const auto& [model, r] : p.rates) {
    rates[model] = {{"prompt_per_1k", r.prompt_per_1k},
                    {"completion_per_1k", r.completion_per_1k}};
  }
  json models = json::object();
  for (const auto& [stage, m] : p.models) models[stage] = m;
  return {
      {"provider",
       {{"kind", p.kind},
        {"base_url", p.base_url},
        {"path_prefix", p.path_prefix},
        {"api_key_env", p.api_key_env},
        {"fixture", p.fixture},
        {"record", p.record},
        {"timeout_seconds", p.timeout_seconds},
        {"max_inflight", p.max_inflight},
        {"min_interval_ms", p.min_interval_ms},
        {"retry",
         {{"max_attempts", p.retry.max_attempts},
          {"initial_backoff_ms", p.retry.initial_backoff.count()},
          {"multiplier", p.retry.multiplier},
          {"max_backoff_ms", p.retry.max_backoff.count()}}},
        {"models", models},
        {"rates", rates}}},
      {"generation",
       {{"seed_topics", c.generation.seed_topics},
        {"drought_threshold", c.generation.drought_threshold
                                  ? json(*c.generation.drought_threshold)
                                  : json(nullptr)},
        {"sample_seed", c.generation.sample_seed},
        {"max_doc_tokens", c.generation.max_doc_tokens},
        {"prompt", c.generation.prompt}}},
      {"refinement",
       {{"similarity_threshold", c.refinement.similarity_threshold},
        {"merge_batch", c.refinement.merge_batch},
        {"prune_threshold", c.refinement.prune_threshold},
        {"iterations", c.refinement.iterations},
        {"prompt", c.refinement.prompt}}},
      {"assignment",
       {{"mode", c.assignment.mode == AssignmentMode::kSingle ? "single" : "multi"},
        {"retry_limit", c.assignment.retry_limit},
        {"seed", c.assignment.seed},
        {"max_doc_tokens", c.assignment.max_doc_tokens},
        {"prompt", c.assignment.prompt}}},
      {"hierarchy",
       {{"chunk_budget", c.hierarchy.chunk_budget},
        {"max_doc_tokens", c.hierarchy.max_doc_tokens},
        {"refine", c.hierarchy.refine},
        {"prune_threshold", c.hierarchy.prune_threshold},
        {"prompt", c.hierarchy.prompt}}},
      {"chars_per_token", c.chars_per_token},
  };
}

std::string config_hash(const PipelineConfig& c) {
  return text::sha256_hex(to_json(c).dump());
}

}  // namespace topicllm
