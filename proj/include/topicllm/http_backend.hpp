#pragma once

#include <chrono>
#include <string>

#include "topicllm/llm_gateway.hpp"

namespace topicllm::llm {

struct HttpBackendOptions {
  /// Scheme, host and optional port, e.g. "https://api.openai.com".
  std::string base_url = "https://api.openai.com";
  /// Path prefix placed before "/chat/completions" and "/embeddings".
  std::string path_prefix = "/v1";
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::seconds timeout{60};
};

/// OpenAI-compatible chat-completions and embeddings transport. One attempt
/// per call; retries belong to Provider.
class HttpBackend : public Backend {
 public:
  /// Throws ProviderError(kAuth) when the key variable is unset or empty.
  explicit HttpBackend(HttpBackendOptions options);

  CompletionResponse complete(const CompletionRequest& request) override;
  std::vector<EmbeddingVector> embed(
      const std::string& model, const std::vector<std::string>& texts) override;

 private:
  std::string post(const std::string& path, const std::string& body);

  HttpBackendOptions options_;
  std::string api_key_;
};

/// Maps an HTTP status and body to a failure kind: 401/403 auth; 400/413
/// mentioning the context length context-length; 408/409/429/5xx transient;
/// anything else bad request.
FailureKind classify_http_status(int status, const std::string& body);

}  // namespace topicllm::llm
