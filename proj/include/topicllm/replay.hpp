#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>

#include "topicllm/llm_gateway.hpp"
#include "topicllm/mock_provider.hpp"

namespace topicllm::llm {

/// Passes calls through to `inner` and appends one JSONL record per
/// successful call: completions keyed by request fingerprint, embeddings by
/// input text.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner,
                   const std::filesystem::path& path);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(
      const std::string& model, const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::mutex mu_;
  std::ofstream out_;
};

/// Builds a keyed mock from a recording. Completions that were not recorded
/// fail with kScriptExhausted. Throws DataError on a malformed file.
std::shared_ptr<MockBackend> load_fixture(const std::filesystem::path& path);

}  // namespace topicllm::llm
