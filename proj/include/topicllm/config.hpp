#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "topicllm/assignment.hpp"
#include "topicllm/llm_gateway.hpp"

namespace topicllm {

struct ProviderSettings {
  std::string kind = "mock";  // mock | openai | replay
  std::string base_url = "https://api.openai.com";
  std::string path_prefix = "/v1";
  std::string api_key_env = "OPENAI_API_KEY";
  /// Recorded responses; required by "replay".
  std::string fixture;
  /// When set, every successful call is appended to this file.
  std::string record;
  int timeout_seconds = 60;
  std::size_t max_inflight = 4;
  int min_interval_ms = 0;
  llm::RetryPolicy retry;
  /// Stage -> model id. Stages: generation, refinement, assignment,
  /// hierarchy, embedding.
  std::map<std::string, std::string> models = {
      {"generation", "gpt-4"},
      {"refinement", "gpt-4"},
      {"assignment", "gpt-3.5-turbo"},
      {"hierarchy", "gpt-4"},
      {"embedding", "all-MiniLM-L6-v2"},
  };
  std::map<std::string, llm::ModelRate> rates = {
      {"gpt-4", {0.03, 0.06}},
      {"gpt-3.5-turbo", {0.0015, 0.002}},
  };
};

struct PipelineConfig {
  ProviderSettings provider;

  struct {
    std::string seed_topics;  // empty: built-in seeds
    std::optional<std::size_t> drought_threshold;
    std::uint64_t sample_seed = 0;
    std::size_t max_doc_tokens = 7000;  // 0 disables truncation
    std::string prompt;                 // empty: built-in template
  } generation;

  struct {
    double similarity_threshold = 0.5;
    std::size_t merge_batch = 5;
    std::size_t prune_threshold = 10;
    std::size_t iterations = 1;
    std::string prompt;
  } refinement;

  struct {
    AssignmentMode mode = AssignmentMode::kSingle;
    int retry_limit = 10;
    std::uint64_t seed = 0;
    std::size_t max_doc_tokens = 3500;
    std::string prompt;
  } assignment;

  struct {
    std::size_t chunk_budget = 6000;
    std::size_t max_doc_tokens = 2000;
    bool refine = false;
    std::size_t prune_threshold = 5;
    std::string prompt;
  } hierarchy;

  std::size_t chars_per_token = 4;

  const std::string& model(const std::string& stage) const;
};

/// Reads and validates; throws ConfigError listing every violation, including
/// unknown keys and wrong types.
PipelineConfig parse_config(const nlohmann::json& j);
PipelineConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError listing every out-of-range value.
void validate(const PipelineConfig& config);

/// Canonical form with every default filled in.
nlohmann::json to_json(const PipelineConfig& config);
/// SHA-256 of the canonical form.
std::string config_hash(const PipelineConfig& config);

}  // namespace topicllm
