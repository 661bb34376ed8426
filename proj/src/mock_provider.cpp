#include "topicllm/mock_provider.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <thread>

#include "topicllm/prompts.hpp"
#include "topicllm/text.hpp"
#include "topicllm/topics.hpp"

namespace topicllm::llm {

void MockBackend::enqueue(const std::string& stage, ScriptStep step) {
  std::lock_guard lock(mu_);
  queues_[stage].push_back(std::move(step));
}

void MockBackend::enqueue_replies(const std::string& stage,
                                  const std::vector<std::string>& texts) {
  std::lock_guard lock(mu_);
  for (const auto& t : texts) queues_[stage].push_back(ScriptStep::reply(t));
}

void MockBackend::set_keyed(const std::string& fingerprint, KeyedReply reply) {
  std::lock_guard lock(mu_);
  keyed_[fingerprint] = std::move(reply);
}

void MockBackend::set_synthesizer(Synthesizer synthesizer) {
  std::lock_guard lock(mu_);
  synthesizer_ = std::move(synthesizer);
}

void MockBackend::set_embedding_dimension(std::size_t dim) {
  std::lock_guard lock(mu_);
  dim_ = dim;
}

void MockBackend::set_embedding_preset(const std::string& text,
                                       std::vector<double> vector) {
  std::lock_guard lock(mu_);
  presets_[text] = std::move(vector);
}

void MockBackend::set_latency(std::chrono::milliseconds latency) {
  std::lock_guard lock(mu_);
  latency_ = latency;
}

CompletionResponse MockBackend::complete(const CompletionRequest& request) {
  const std::size_t now = ++inflight_;
  std::size_t peak = peak_inflight_.load();
  while (now > peak && !peak_inflight_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& n;
    ~Leave() { --n; }
  } leave{inflight_};

  std::optional<ScriptStep> step;
  std::optional<KeyedReply> keyed;
  Synthesizer synth;
  std::chrono::milliseconds latency;
  {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    latency = latency_;
    for (const std::string& key : {request.stage, std::string()}) {
      auto q = queues_.find(key);
      if (q != queues_.end() && !q->second.empty()) {
        step = std::move(q->second.front());
        q->second.pop_front();
        break;
      }
    }
    if (!step) {
      if (!keyed_.empty()) {
        auto k = keyed_.find(request_fingerprint(request));
        if (k != keyed_.end()) keyed = k->second;
      }
      if (!keyed) synth = synthesizer_;
    }
  }
  if (latency.count() > 0) std::this_thread::sleep_for(latency);

  CompletionResponse out;
  if (step) {
    if (step->failure) {
      throw ProviderError(*step->failure, "scripted " +
                                              std::string(to_string(*step->failure)) +
                                              " failure");
    }
    out.text = step->text;
  } else if (keyed) {
    out.text = keyed->text;
    out.usage.prompt_tokens = keyed->prompt_tokens;
    out.usage.completion_tokens = keyed->completion_tokens;
  } else if (synth) {
    out.text = synth(request);
  } else {
    throw ProviderError(FailureKind::kScriptExhausted,
                        "mock has no reply for stage \"" + request.stage + "\"");
  }
  out.provider_meta["backend"] = "mock";
  return out;
}

std::vector<double> MockBackend::embed_one(const std::string& t) const {
  if (auto p = presets_.find(t); p != presets_.end()) return p->second;
  if (auto colon = t.find(':'); colon != std::string::npos) {
    auto p = presets_.find(std::string(text::trim(t.substr(0, colon))));
    if (p != presets_.end()) return p->second;
  }
  return hashed_bag_of_words(t, dim_);
}

std::vector<EmbeddingVector> MockBackend::embed(
    const std::string& model, const std::vector<std::string>& texts) {
  std::lock_guard lock(mu_);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back({embed_one(t), model});
  return out;
}

std::vector<CompletionRequest> MockBackend::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t MockBackend::pending(const std::string& stage) const {
  std::lock_guard lock(mu_);
  auto q = queues_.find(stage);
  return q == queues_.end() ? 0 : q->second.size();
}

namespace {

std::vector<std::string> words_of(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

const std::set<std::string>& stopwords() {
  static const std::set<std::string> kWords = {
      "about",   "above",    "after",    "again",   "against", "among",
      "amends",  "another",  "because",  "before",  "being",   "below",
      "between", "could",    "doing",    "during",  "every",   "other",
      "their",   "there",    "these",    "those",   "through", "under",
      "until",   "where",    "which",    "while",   "would",   "should",
      "shall",   "within",   "without",  "including", "certain", "provides",
      "requires", "section", "document", "mentions",  "someone", "something",
  };
  return kWords;
}

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string get(const CompletionRequest& r, const std::string& key) {
  auto it = r.context.find(key);
  return it == r.context.end() ? std::string() : it->second;
}

std::string synth_generation(const CompletionRequest& r) {
  const auto kw = dominant_keyword(get(r, prompts::kDocument));
  if (kw.empty()) return "None";
  for (const auto& line : text::split_lines(get(r, prompts::kTopics))) {
    auto t = parse_topic_line(line);
    if (t && text::iequals(t->label, kw)) return format_topic(*t);
  }
  return "[1] " + capitalize(kw) + ": Mentions " + kw + ".";
}

std::size_t occurrences(const std::vector<std::string>& words,
                        const std::string& needle) {
  return static_cast<std::size_t>(std::count(words.begin(), words.end(), needle));
}

std::string synth_assignment(const CompletionRequest& r) {
  const std::string doc = get(r, prompts::kDocument);
  const auto words = words_of(doc);
  std::optional<Topic> best;
  std::size_t best_hits = 0;
  for (const auto& line : text::split_lines(get(r, prompts::kTree))) {
    auto t = parse_topic_line(line);
    if (!t || t->level != 1) continue;
    std::size_t hits = 0;
    for (const auto& w : words_of(t->label)) hits += occurrences(words, w);
    if (!best || hits > best_hits) {
      best = *t;
      best_hits = hits;
    }
  }
  if (!best) return "None";

  // Six-word window around the first mention, cut from the raw text so the
  // quote is verbatim.
  const std::string flat = text::collapse_whitespace(doc);
  const auto raw = text::split(flat, ' ');
  std::size_t start = 0;
  const auto label_words = words_of(best->label);
  for (std::size_t i = 0; i < raw.size() && !label_words.empty(); ++i) {
    if (words_of(raw[i]) == std::vector<std::string>{label_words.front()}) {
      start = i >= 2 ? i - 2 : 0;
      break;
    }
  }
  std::string quote;
  for (std::size_t i = start; i < raw.size() && i < start + 6; ++i) {
    if (!quote.empty()) quote += ' ';
    quote += raw[i];
  }
  // The parser reads the quote up to the closing '")'.
  quote = text::replace_all(quote, "\"", "'");
  return format_topic(*best) + " (\"..." + quote + "...\")";
}

std::string synth_hierarchy(const CompletionRequest& r) {
  static const std::regex kHead(R"(^Document (\d+):\s*$)");
  const std::string parent = get(r, "parent");
  std::vector<std::string> docs;
  for (const auto& line : text::split_lines(get(r, prompts::kDocuments))) {
    std::smatch m;
    if (std::regex_match(line, m, kHead)) {
      docs.emplace_back();
      continue;
    }
    if (!docs.empty()) docs.back() += line + "\n";
  }
  std::vector<std::string> exclude = words_of(parent);
  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const auto kw = dominant_keyword(docs[i], exclude);
    if (kw.empty()) continue;
    auto g = std::find_if(groups.begin(), groups.end(),
                          [&](const auto& p) { return p.first == kw; });
    if (g == groups.end()) {
      groups.push_back({kw, {}});
      g = std::prev(groups.end());
    }
    g->second.push_back(i + 1);
  }
  if (groups.empty()) return "None";
  std::string out = "[1] " + parent;
  for (const auto& [kw, ids] : groups) {
    out += "\n    [2] " + capitalize(kw) + " (Document: ";
    for (std::size_t k = 0; k < ids.size(); ++k) {
      out += (k ? ", " : "") + std::to_string(ids[k]);
    }
    out += "): Mentions " + kw + ".";
  }
  return out;
}

}  // namespace

std::vector<double> hashed_bag_of_words(const std::string& t, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  if (dim == 0) return v;
  for (const auto& w : words_of(t)) {
    const std::uint64_t h = text::sha256_u64(w);
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
  }
  return v;
}

std::string dominant_keyword(const std::string& t,
                             const std::vector<std::string>& exclude) {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> counts;
  for (const auto& w : words_of(t)) {
    if (w.size() < 5 || stopwords().count(w)) continue;
    if (!std::all_of(w.begin(), w.end(),
                     [](unsigned char c) { return std::isalpha(c); })) {
      continue;
    }
    if (std::find(exclude.begin(), exclude.end(), w) != exclude.end()) continue;
    if (counts[w]++ == 0) order.push_back(w);
  }
  std::string best;
  std::size_t best_count = 0;
  for (const auto& w : order) {
    if (counts[w] > best_count) {
      best = w;
      best_count = counts[w];
    }
  }
  return best;
}

MockBackend::Synthesizer make_pipeline_synthesizer() {
  return [](const CompletionRequest& r) -> std::string {
    if (r.stage == "generation") return synth_generation(r);
    if (r.stage == "assignment") return synth_assignment(r);
    if (r.stage == "hierarchy") return synth_hierarchy(r);
    return "None";
  };
}

}  // namespace topicllm::llm
