#include "topicllm/generation.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <json.hpp>

#include "topicllm/errors.hpp"
#include "topicllm/sampling.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

std::size_t GenerationRecord::new_topic_count() const {
  std::size_t n = 0;
  for (bool b : is_new) n += b ? 1 : 0;
  return n;
}

std::vector<std::size_t> GenerationTrace::growth_curve(
    std::size_t seed_count) const {
  std::vector<std::size_t> curve;
  curve.reserve(records.size());
  std::size_t size = seed_count;
  for (const auto& r : records) {
    size += r.new_topic_count();
    curve.push_back(size);
  }
  return curve;
}

void write_trace(const GenerationTrace& trace, std::ostream& out) {
  for (const auto& r : trace.records) {
    nlohmann::json topics = nlohmann::json::array();
    for (std::size_t i = 0; i < r.parsed.size(); ++i) {
      topics.push_back({{"line", format_topic(r.parsed[i])},
                        {"new", static_cast<bool>(r.is_new[i])}});
    }
    nlohmann::json rec = {
        {"id", r.doc_id}, {"response", r.raw_response}, {"topics", topics}};
    if (r.parse_error) rec["error"] = *r.parse_error;
    out << rec.dump() << '\n';
  }
}

void write_trace(const GenerationTrace& trace,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_trace(trace, out);
}

std::string render_generation_prompt(const TopicList& topics,
                                     const Document& doc,
                                     const PromptTemplate& tmpl) {
  if (text::trim(doc.text).empty()) {
    throw DataError("document \"" + doc.id + "\" has empty text");
  }
  return tmpl.render({{prompts::kTopics, render_topic_lines(topics)},
                      {prompts::kDocument, doc.text}});
}

namespace {
bool is_none(std::string_view s) {
  auto t = text::trim(s);
  while (!t.empty() && (t.back() == '.' || t.back() == '"')) t.remove_suffix(1);
  while (!t.empty() && t.front() == '"') t.remove_prefix(1);
  return text::iequals(t, "none");
}
}  // namespace

std::vector<Topic> parse_generation_response(const std::string& response) {
  if (is_none(response)) return {};
  std::vector<Topic> topics;
  std::vector<std::string> skipped;
  for (const auto& line : text::split_lines(response)) {
    if (text::trim(line).empty()) continue;
    if (auto t = parse_topic_line(line)) {
      t->count = 0;
      topics.push_back(std::move(*t));
    } else {
      skipped.push_back(line);
    }
  }
  if (topics.empty()) {
    throw FormatError("no topic line in response: \"" +
                      std::string(text::trim(response)).substr(0, 120) + "\"");
  }
  for (const auto& line : skipped) {
    spdlog::warn("skipping unparseable generation line: {}", line);
  }
  return topics;
}

GenerationResult generation_pass(const Corpus& sample, const TopicList& seeds,
                                 llm::Provider& provider,
                                 const GenerationConfig& config) {
  if (sample.empty()) throw DataError("generation sample is empty");

  GenerationResult result;
  result.topics = seeds;
  DroughtState drought;
  if (config.drought_threshold) drought.threshold = *config.drought_threshold;

  for (const auto& original : sample) {
    Document doc = config.max_doc_tokens
                       ? truncate(original, *config.max_doc_tokens,
                                  config.estimator)
                       : original;
    llm::CompletionRequest req;
    req.stage = "generation";
    req.model = config.model;
    req.max_tokens = config.max_tokens;
    const std::string topic_lines = render_topic_lines(result.topics);
    req.prompt = render_generation_prompt(result.topics, doc, config.prompt);
    req.context = {{prompts::kTopics, topic_lines},
                   {prompts::kDocument, doc.text}};

    GenerationRecord rec;
    rec.doc_id = doc.id;
    try {
      rec.raw_response = provider.complete(req).text;
    } catch (const llm::ProviderError& e) {
      result.aborted = e.what();
      spdlog::error("generation aborted at document {}: {}", doc.id, e.what());
      return result;
    }

    try {
      rec.parsed = parse_generation_response(rec.raw_response);
    } catch (const FormatError& e) {
      rec.parse_error = e.what();
      spdlog::warn("document {}: {}", doc.id, e.what());
    }

    for (const auto& t : rec.parsed) {
      bool added = false;
      if (t.level != 1) {
        spdlog::warn("document {}: ignoring level-{} topic \"{}\"", doc.id,
                     t.level, t.label);
      } else if (Topic* existing = result.topics.find(t.label, 1)) {
        ++existing->count;
      } else {
        Topic fresh = t;
        fresh.count = 1;
        result.topics.add(std::move(fresh));
        added = true;
      }
      rec.is_new.push_back(added);
    }

    const auto new_topics = rec.new_topic_count();
    result.trace.records.push_back(std::move(rec));

    if (config.drought_threshold) {
      auto step = drought_update(drought, new_topics);
      drought = step.state;
      if (step.stop) {
        result.stopped_early = true;
        spdlog::info("topic drought after {} documents; stopping",
                     drought.docs_since_new_topic);
        break;
      }
    }
  }
  return result;
}

}  // namespace topicllm
