#include "topicllm/replay.hpp"

#include <json.hpp>
#include <string>

#include "topicllm/errors.hpp"

namespace topicllm::llm {

using nlohmann::json;

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner,
                                   const std::filesystem::path& path)
    : inner_(std::move(inner)), out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw DataError("cannot open recording " + path.string());
}

CompletionResponse RecordingBackend::complete(const CompletionRequest& request) {
  auto res = inner_->complete(request);
  json rec = {{"kind", "completion"},
              {"fingerprint", request_fingerprint(request)},
              {"stage", request.stage},
              {"response", res.text},
              {"prompt_tokens", res.usage.prompt_tokens},
              {"completion_tokens", res.usage.completion_tokens}};
  std::lock_guard lock(mu_);
  out_ << rec.dump() << '\n';
  out_.flush();
  return res;
}

std::vector<EmbeddingVector> RecordingBackend::embed(
    const std::string& model, const std::vector<std::string>& texts) {
  auto res = inner_->embed(model, texts);
  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < texts.size() && i < res.size(); ++i) {
    json rec = {{"kind", "embedding"},
                {"model", model},
                {"text", texts[i]},
                {"vector", res[i].values}};
    out_ << rec.dump() << '\n';
  }
  out_.flush();
  return res;
}

std::shared_ptr<MockBackend> load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open fixture " + path.string());
  auto mock = std::make_shared<MockBackend>();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const auto j = json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "completion") {
        mock->set_keyed(j.at("fingerprint").get<std::string>(),
                        {j.at("response").get<std::string>(),
                         j.value("prompt_tokens", 0ULL),
                         j.value("completion_tokens", 0ULL)});
      } else if (kind == "embedding") {
        mock->set_embedding_preset(j.at("text").get<std::string>(),
                                   j.at("vector").get<std::vector<double>>());
      } else {
        throw DataError(where + ": unknown record kind \"" + kind + "\"");
      }
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return mock;
}

}  // namespace topicllm::llm
