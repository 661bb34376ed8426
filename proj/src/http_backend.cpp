#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "topicllm/http_backend.hpp"

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>

#include "topicllm/text.hpp"

namespace topicllm::llm {

using nlohmann::json;

FailureKind classify_http_status(int status, const std::string& body) {
  if (status == 401 || status == 403) return FailureKind::kAuth;
  if (status == 408 || status == 409 || status == 429 || status >= 500) {
    return FailureKind::kTransient;
  }
  if (status == 400 || status == 413) {
    const auto lower = text::to_lower(body);
    if (lower.find("context_length") != std::string::npos ||
        lower.find("context length") != std::string::npos ||
        lower.find("maximum context") != std::string::npos) {
      return FailureKind::kContextLength;
    }
  }
  return FailureKind::kBadRequest;
}

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ProviderError(FailureKind::kAuth,
                        "environment variable " + options_.api_key_env +
                            " is not set");
  }
  api_key_ = key;
}

std::string HttpBackend::post(const std::string& path, const std::string& body) {
  httplib::Client client(options_.base_url);
  const auto secs = options_.timeout.count();
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};
  auto res = client.Post(options_.path_prefix + path, headers, body,
                         "application/json");
  if (!res) {
    throw ProviderError(FailureKind::kTransient,
                        "request to " + options_.base_url + " failed: " +
                            httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProviderError(classify_http_status(res->status, res->body),
                        "HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 300));
  }
  return res->body;
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
  json body = {{"model", request.model},
               {"messages", json::array({{{"role", "user"},
                                          {"content", request.prompt}}})},
               {"max_tokens", request.max_tokens},
               {"temperature", request.temperature},
               {"top_p", request.top_p}};
  const std::string raw = post("/chat/completions", body.dump());
  CompletionResponse out;
  try {
    const auto j = json::parse(raw);
    out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage")) {
      const auto& u = j["usage"];
      out.usage.prompt_tokens = u.value("prompt_tokens", 0ULL);
      out.usage.completion_tokens = u.value("completion_tokens", 0ULL);
    }
    if (j.contains("id")) out.provider_meta["id"] = j["id"].get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(FailureKind::kBadRequest,
                        std::string("malformed completion payload: ") + e.what());
  }
  return out;
}

std::vector<EmbeddingVector> HttpBackend::embed(
    const std::string& model, const std::vector<std::string>& texts) {
  json body = {{"model", model}, {"input", texts}};
  const std::string raw = post("/embeddings", body.dump());
  std::vector<EmbeddingVector> out;
  try {
    const auto j = json::parse(raw);
    for (const auto& item : j.at("data")) {
      out.push_back({item.at("embedding").get<std::vector<double>>(), model});
    }
  } catch (const json::exception& e) {
    throw ProviderError(FailureKind::kBadRequest,
                        std::string("malformed embedding payload: ") + e.what());
  }
  return out;
}

}  // namespace topicllm::llm
