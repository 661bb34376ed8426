#include "topicllm/assignment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <random>
#include <regex>

#include "topicllm/concurrency.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

using nlohmann::json;

const char* to_string(AssignmentErrorKind kind) {
  switch (kind) {
    case AssignmentErrorKind::kHallucination: return "Hallucination";
    case AssignmentErrorKind::kInvalidResponse: return "InvalidResponse";
    case AssignmentErrorKind::kFormatError: return "FormatError";
    case AssignmentErrorKind::kQuoteNotFound: return "QuoteNotFound";
    case AssignmentErrorKind::kRetryExhausted: return "RetryExhausted";
  }
  return "Unknown";
}

namespace {

constexpr std::string_view kDots = "...";
constexpr std::size_t kMinShrunkBudget = 32;
constexpr std::string_view kEllipsis = "\xE2\x80\xA6";  // U+2026

bool strip_prefix(std::string_view& s, std::string_view p) {
  if (s.substr(0, p.size()) != p) return false;
  s.remove_prefix(p.size());
  return true;
}

bool strip_suffix(std::string_view& s, std::string_view p) {
  if (s.size() < p.size() || s.substr(s.size() - p.size()) != p) return false;
  s.remove_suffix(p.size());
  return true;
}

// Splits on "..." and U+2026.
std::vector<std::string> ellipsis_fragments(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t width = 0;
    if (s.substr(i, kDots.size()) == kDots) width = kDots.size();
    if (s.substr(i, kEllipsis.size()) == kEllipsis) width = kEllipsis.size();
    if (width == 0) {
      ++i;
      continue;
    }
    out.emplace_back(s.substr(start, i - start));
    i += width;
    while (i < s.size() && s[i] == '.') ++i;  // "...." and longer
    start = i;
  }
  out.emplace_back(s.substr(start));
  return out;
}

bool is_invalid_marker(std::string_view s) {
  auto t = text::trim(s);
  while (!t.empty() && (t.back() == '.' || t.back() == '"' || t.back() == '!')) {
    t.remove_suffix(1);
  }
  while (!t.empty() && t.front() == '"') t.remove_prefix(1);
  return text::iequals(t, "none") || text::iequals(t, "error");
}

struct QuoteSplit {
  std::string description;
  std::string quote;
};

// Finds the trailing `("quote")` of an entry body.
std::optional<QuoteSplit> split_quote(std::string_view body) {
  body = text::trim(body);
  if (!body.empty() && body.back() == '.') {
    auto b = body;
    b.remove_suffix(1);
    if (!text::trim(b).empty() && text::trim(b).back() == ')') body = text::trim(b);
  }
  if (body.empty() || body.back() != ')') return std::nullopt;
  static constexpr std::string_view kOpeners[] = {"\"", "\xE2\x80\x9C", "'",
                                                  "\xE2\x80\x98"};
  static constexpr std::string_view kClosers[] = {"\"", "\xE2\x80\x9D", "'",
                                                  "\xE2\x80\x99"};
  for (std::size_t p = body.find('('); p != std::string_view::npos;
       p = body.find('(', p + 1)) {
    auto inner = body.substr(p + 1, body.size() - p - 2);
    auto t = text::trim(inner);
    bool opened = false;
    for (auto o : kOpeners) opened = opened || strip_prefix(t, o);
    if (!opened) continue;
    for (auto c : kClosers) {
      if (strip_suffix(t, c)) break;
    }
    return QuoteSplit{std::string(text::trim(body.substr(0, p))),
                      std::string(text::trim(t))};
  }
  return std::nullopt;
}

std::string mode_instruction(AssignmentMode mode) {
  if (mode == AssignmentMode::kSingle) {
    return "Assign exactly ONE topic to the document. Output a single topic "
           "line (with its path if it is not on the top level) and DO NOT "
           "list multiple topics.\n";
  }
  return "Assign one or more topics to the document, one topic per line.\n";
}

std::string correction_note(const AssignmentError& error) {
  return "[Correction]\nYour previous response was rejected (" +
         std::string(to_string(error.kind)) + ": " + error.detail +
         "). The topic list has been reordered. Reassign the document to "
         "topics that exist in the hierarchy and copy the quote verbatim "
         "from the document.\n";
}

std::string render_tree(const TopicList& topics) {
  std::string out;
  for (const auto& t : topics) {
    if (!out.empty()) out += '\n';
    out += std::string(static_cast<std::size_t>(4 * (t.level - 1)), ' ');
    out += format_topic(t);
  }
  return out;
}

}  // namespace

bool verify_quote(std::string_view quote, std::string_view document) {
  auto q = text::trim(quote);
  for (;;) {
    q = text::trim(q);
    if (strip_prefix(q, kEllipsis) || strip_suffix(q, kEllipsis)) continue;
    if (q.substr(0, kDots.size()) == kDots) {
      while (!q.empty() && q.front() == '.') q.remove_prefix(1);
      continue;
    }
    if (q.size() >= kDots.size() && q.substr(q.size() - kDots.size()) == kDots) {
      while (!q.empty() && q.back() == '.') q.remove_suffix(1);
      continue;
    }
    break;
  }
  const std::string doc = text::collapse_whitespace(document);
  std::size_t from = 0;
  bool any = false;
  for (const auto& fragment : ellipsis_fragments(q)) {
    const std::string needle = text::collapse_whitespace(fragment);
    if (needle.empty()) continue;
    auto pos = doc.find(needle, from);
    if (pos == std::string::npos) return false;
    from = pos + needle.size();
    any = true;
  }
  return any;
}

std::string render_assignment_prompt(const TopicList& topics,
                                     const Document& doc, AssignmentMode mode,
                                     const PromptTemplate& tmpl,
                                     const std::string& correction) {
  if (topics.empty()) throw DataError("assignment needs a nonempty topic list");
  return tmpl.render({{prompts::kTree, render_tree(topics)},
                      {prompts::kDocument, doc.text},
                      {prompts::kModeInstruction, mode_instruction(mode)},
                      {prompts::kCorrection, correction}});
}

ParsedAssignment parse_assignment_response(const std::string& response,
                                           const TopicList& topics,
                                           const Document& doc) {
  using K = AssignmentErrorKind;
  if (text::trim(response).empty()) {
    return AssignmentError{K::kInvalidResponse, "empty response"};
  }
  if (is_invalid_marker(response)) {
    return AssignmentError{K::kInvalidResponse,
                           "model returned \"" +
                               std::string(text::trim(response)) + "\""};
  }
  static const std::regex kHead(R"(^\s*\[(\d+)\]\s*([^:\n]*?)\s*(:(.*))?$)");

  std::vector<std::pair<int, std::string>> path;  // open hierarchy path
  std::vector<AssignmentEntry> entries;
  std::size_t unparsed = 0;
  bool saw_parent = false;

  for (const auto& line : text::split_lines(response)) {
    if (text::trim(line).empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, kHead)) {
      ++unparsed;
      continue;
    }
    const int level = std::stoi(m[1].str());
    std::string label(text::trim(m[2].str()));
    while (!path.empty() && path.back().first >= level) path.pop_back();

    if (!m[3].matched) {
      // Bare "[n] Label": a parent on the path to a deeper assignment.
      const Topic* t = topics.find(label, level);
      if (t == nullptr) {
        return AssignmentError{K::kHallucination,
                               "topic \"" + label + "\" is not in the list"};
      }
      path.emplace_back(level, t->label);
      saw_parent = true;
      continue;
    }

    auto split = split_quote(m[4].str());
    if (!split) {
      return AssignmentError{K::kFormatError,
                             "no supporting quote for \"" + label + "\""};
    }
    const Topic* t = topics.find(label, level);
    if (t == nullptr) {
      return AssignmentError{K::kHallucination,
                             "topic \"" + label + "\" is not in the list"};
    }
    if (!verify_quote(split->quote, doc.text)) {
      return AssignmentError{K::kQuoteNotFound,
                             "quote for \"" + t->label +
                                 "\" does not occur in the document"};
    }
    AssignmentEntry entry;
    entry.label = t->label;
    entry.description = split->description;
    entry.quote = split->quote;
    for (const auto& [lvl, parent] : path) entry.path.push_back(parent);
    entry.path.push_back(t->label);
    const bool duplicate =
        std::any_of(entries.begin(), entries.end(),
                    [&](const auto& e) { return e.label == entry.label; });
    if (!duplicate) entries.push_back(std::move(entry));
  }

  if (entries.empty()) {
    if (saw_parent) {
      return AssignmentError{K::kInvalidResponse,
                             "response names topics but assigns none"};
    }
    return AssignmentError{K::kFormatError,
                           "no assignment line in response: \"" +
                               std::string(text::trim(response)).substr(0, 120) +
                               "\""};
  }
  if (unparsed > 0) {
    spdlog::warn("document {}: skipped {} unparseable assignment line(s)",
                 doc.id, unparsed);
  }
  return entries;
}

std::uint64_t shuffle_seed(std::uint64_t seed, const std::string& doc_id,
                           int attempt) {
  return text::sha256_u64(std::to_string(seed) + '\x1f' + doc_id + '\x1f' +
                          std::to_string(attempt));
}

TopicList order_for_attempt(const TopicList& topics, std::uint64_t seed,
                            const std::string& doc_id, int attempt) {
  std::vector<Topic> order = topics.topics();
  for (int a = 2; a <= attempt; ++a) {
    const auto previous = order;
    std::mt19937_64 rng(shuffle_seed(seed, doc_id, a));
    // Each retry sees an order different from the one before it.
    for (int tries = 0; tries < 16; ++tries) {
      std::shuffle(order.begin(), order.end(), rng);
      if (order.size() < 2 || order != previous) break;
    }
  }
  TopicList out;
  out.mutable_topics() = std::move(order);
  out.set_seed_labels(topics.seed_labels());
  return out;
}

AssignmentOutcome assign_with_correction(const Document& doc,
                                         const TopicList& topics,
                                         llm::Provider& provider,
                                         const AssignmentConfig& config) {
  if (topics.empty()) throw DataError("assignment needs a nonempty topic list");
  if (config.retry_limit < 1) throw ConfigError("retry_limit must be >= 1");

  AssignmentOutcome outcome;
  std::optional<std::size_t> budget = config.max_doc_tokens;
  std::optional<AssignmentError> last_error;
  int context_shrinks = 0;
  int attempt = 0;

  while (attempt < config.retry_limit) {
    ++attempt;
    const TopicList ordered =
        order_for_attempt(topics, config.seed, doc.id, attempt);
    const Document view =
        budget ? truncate(doc, *budget, config.estimator) : doc;
    const std::string correction =
        last_error ? correction_note(*last_error) : std::string();

    llm::CompletionRequest req;
    req.stage = "assignment";
    req.model = config.model;
    req.max_tokens = config.max_tokens;
    req.prompt = render_assignment_prompt(ordered, view, config.mode,
                                          config.prompt, correction);
    req.context = {
        {prompts::kTree, render_tree(ordered)},
        {prompts::kDocument, view.text},
        {"mode", config.mode == AssignmentMode::kSingle ? "single" : "multi"},
        {prompts::kCorrection, correction}};

    std::string response;
    try {
      response = provider.complete(req).text;
    } catch (const llm::ProviderError& e) {
      const std::size_t current =
          budget ? std::min(*budget, config.estimator.estimate(doc.text))
                 : config.estimator.estimate(doc.text);
      if (e.kind() == llm::FailureKind::kContextLength && context_shrinks < 4 &&
          current > kMinShrunkBudget) {
        budget = std::max(kMinShrunkBudget, current / 2);
        ++context_shrinks;
        --attempt;
        spdlog::warn("document {}: context too long, retrying with {} tokens",
                     doc.id, *budget);
        continue;
      }
      throw;
    }

    AttemptRecord record;
    for (const auto& t : ordered) record.topic_order.push_back(t.label);
    record.raw_response = response;

    auto parsed = parse_assignment_response(response, topics, doc);
    if (auto* err = std::get_if<AssignmentError>(&parsed)) {
      record.error = *err;
    } else {
      auto& entries = std::get<std::vector<AssignmentEntry>>(parsed);
      if (config.mode == AssignmentMode::kSingle && entries.size() > 1) {
        record.error = AssignmentError{
            AssignmentErrorKind::kInvalidResponse,
            "expected one topic, got " + std::to_string(entries.size())};
      } else {
        outcome.history.push_back(std::move(record));
        outcome.attempts = attempt;
        outcome.assignment =
            Assignment{doc.id, std::move(entries), attempt, response};
        return outcome;
      }
    }
    last_error = record.error;
    outcome.history.push_back(std::move(record));
  }

  outcome.attempts = attempt;
  outcome.error = AssignmentError{
      AssignmentErrorKind::kRetryExhausted,
      "no valid assignment after " + std::to_string(attempt) +
          " attempts; last error: " +
          (last_error ? std::string(to_string(last_error->kind)) + ": " +
                            last_error->detail
                      : std::string("none"))};
  return outcome;
}

CorpusAssignment assign_corpus(const Corpus& docs, const TopicList& topics,
                               llm::Provider& provider,
                               const AssignmentConfig& config) {
  if (topics.empty()) throw DataError("assignment needs a nonempty topic list");
  std::vector<AssignmentOutcome> outcomes(docs.size());
  for_each_index(docs.size(), provider.max_inflight(), [&](std::size_t i) {
    outcomes[i] = assign_with_correction(docs[i], topics, provider, config);
  });

  CorpusAssignment result;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    for (const auto& h : o.history) {
      if (h.error) ++result.report.retries[to_string(h.error->kind)];
    }
    if (o.assignment) {
      result.assignments.push_back(std::move(*o.assignment));
    } else {
      result.report.failed_ids.push_back(docs[i].id);
      ++result.report.failures[to_string(o.error->kind)];
    }
  }
  std::sort(result.assignments.begin(), result.assignments.end(),
            [](const Assignment& a, const Assignment& b) {
              return a.doc_id < b.doc_id;
            });
  std::sort(result.report.failed_ids.begin(), result.report.failed_ids.end());
  result.report.assigned = result.assignments.size();
  return result;
}

void write_assignments(const CorpusAssignment& result, std::ostream& out) {
  for (const auto& a : result.assignments) {
    json topics = json::array();
    for (const auto& e : a.entries) {
      json entry = {{"label", e.label},
                    {"description", e.description},
                    {"quote", e.quote}};
      if (e.path.size() > 1) entry["path"] = e.path;
      topics.push_back(std::move(entry));
    }
    out << json{{"id", a.doc_id}, {"topics", topics}, {"attempts", a.attempts}}
               .dump()
        << '\n';
  }
  const auto& r = result.report;
  json summary = {{"assigned", r.assigned},
                  {"failed", r.failed_ids.size()},
                  {"failed_ids", r.failed_ids},
                  {"failures", r.failures},
                  {"retries", r.retries}};
  out << json{{"summary", summary}}.dump() << '\n';
}

void write_assignments(const CorpusAssignment& result,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_assignments(result, out);
}

std::vector<Assignment> parse_assignments(std::istream& in,
                                          const std::string& source) {
  std::vector<Assignment> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + "malformed record: " + e.what());
    }
    if (rec.contains("summary")) continue;
    try {
      Assignment a;
      a.doc_id = rec.at("id").get<std::string>();
      a.attempts = rec.value("attempts", 1);
      for (const auto& t : rec.at("topics")) {
        AssignmentEntry e;
        e.label = t.at("label").get<std::string>();
        e.description = t.value("description", "");
        e.quote = t.value("quote", "");
        if (t.contains("path")) {
          e.path = t["path"].get<std::vector<std::string>>();
        } else {
          e.path = {e.label};
        }
        a.entries.push_back(std::move(e));
      }
      out.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw DataError(where + "invalid assignment record: " + e.what());
    }
  }
  return out;
}

std::vector<Assignment> read_assignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open assignments file " + path.string());
  return parse_assignments(in, path.string());
}

}  // namespace topicllm
