#include "topicllm/hierarchy.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>

#include "topicllm/concurrency.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

std::map<std::string, std::vector<std::string>> group_docs_by_topic(
    const std::vector<Assignment>& assignments) {
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& a : assignments) {
    for (const auto& e : a.entries) {
      // Hierarchical answers group under their top-level label.
      const std::string& key = e.path.empty() ? e.label : e.path.front();
      auto& ids = groups[key];
      if (std::find(ids.begin(), ids.end(), a.doc_id) == ids.end()) {
        ids.push_back(a.doc_id);
      }
    }
  }
  return groups;
}

std::vector<std::vector<std::size_t>> pack_chunks(
    const std::vector<Document>& docs, std::size_t budget,
    const TokenEstimator& estimator) {
  std::vector<std::vector<std::size_t>> chunks;
  std::size_t used = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::size_t cost = estimator.estimate(docs[i].text);
    if (chunks.empty() || used + cost > budget) {
      chunks.emplace_back();
      used = 0;
    }
    chunks.back().push_back(i);
    used += cost;
  }
  return chunks;
}

std::vector<ParsedSubtopic> parse_subtopic_response(
    const std::string& response, std::size_t chunk_size,
    std::vector<RejectedSubtopic>* rejected) {
  static const std::regex kLine(
      R"(^\s*\[(\d+)\]\s*([^:(\n]*?)\s*(?:\(\s*(?:Documents?|Docs?)\s*:?\s*([^)]*)\))?\s*(?::\s*(.*?))?\s*$)",
      std::regex::icase);
  auto reject = [&](const std::string& line, const std::string& reason) {
    spdlog::warn("dropping subtopic \"{}\": {}", line, reason);
    if (rejected) rejected->push_back({line, reason});
  };

  const auto trimmed = text::trim(response);
  if (text::iequals(trimmed, "none") || text::iequals(trimmed, "\"none\"")) {
    return {};
  }

  std::vector<ParsedSubtopic> out;
  std::size_t matched = 0;
  for (const auto& line : text::split_lines(response)) {
    if (text::trim(line).empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, kLine) || text::trim(m[2].str()).empty()) {
      spdlog::warn("skipping unparseable subtopic line: {}", line);
      continue;
    }
    ++matched;
    const int level = std::stoi(m[1].str());
    if (level == 1) continue;  // parent line
    if (level != 2) {
      reject(line, "subtopics must be on level 2");
      continue;
    }
    ParsedSubtopic sub;
    sub.topic.level = 2;
    sub.topic.label = std::string(text::trim(m[2].str()));
    sub.topic.description =
        m[4].matched ? std::string(text::trim(m[4].str())) : std::string();
    if (!m[3].matched) {
      reject(line, "GroundingError: no supporting documents cited");
      continue;
    }
    std::string problem;
    for (const auto& raw : text::split(m[3].str(), ',')) {
      auto token = text::trim(raw);
      if (token.empty()) continue;
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(std::string(token), &used);
        if (used != token.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        problem = "GroundingError: unreadable document index \"" +
                  std::string(token) + "\"";
        break;
      }
      if (idx < 1 || idx > chunk_size) {
        problem = "GroundingError: cites Document " + std::to_string(idx) +
                  " but the prompt held " + std::to_string(chunk_size);
        break;
      }
      if (std::find(sub.doc_indices.begin(), sub.doc_indices.end(), idx) ==
          sub.doc_indices.end()) {
        sub.doc_indices.push_back(idx);
      }
    }
    if (problem.empty() && sub.doc_indices.empty()) {
      problem = "GroundingError: no supporting documents cited";
    }
    if (!problem.empty()) {
      reject(line, problem);
      continue;
    }
    if (sub.topic.description.empty()) sub.topic.description = sub.topic.label;
    out.push_back(std::move(sub));
  }
  if (matched == 0) {
    throw FormatError("no subtopic line in response: \"" +
                      std::string(trimmed).substr(0, 120) + "\"");
  }
  return out;
}

namespace {

std::string render_branch(const Topic& parent, const std::vector<Topic>& seeds,
                          const std::vector<Subtopic>& subs) {
  std::string out = "[" + std::to_string(parent.level) + "] " + parent.label;
  std::vector<std::string> seen;
  auto emit = [&](const Topic& t) {
    for (const auto& s : seen) {
      if (text::iequals(s, t.label)) return;
    }
    seen.push_back(t.label);
    out += "\n    [" + std::to_string(t.level) + "] " + t.label;
  };
  for (const auto& s : seeds) emit(s);
  for (const auto& s : subs) emit(s.topic);
  return out;
}

void add_ids(std::vector<std::string>& into,
             const std::vector<std::string>& ids) {
  for (const auto& id : ids) {
    if (std::find(into.begin(), into.end(), id) == into.end()) into.push_back(id);
  }
}

std::vector<Subtopic> refine_subtopics(const Topic& parent,
                                       std::vector<Subtopic> subs,
                                       llm::Provider& provider,
                                       const RefinementConfig& cfg) {
  if (subs.size() < 2) return subs;
  TopicList list;
  for (const auto& s : subs) {
    Topic t = s.topic;
    t.count = s.doc_ids.size();
    list.add(t);
  }
  RefinementResult refined;
  try {
    refined = refine(list, provider, cfg);
  } catch (const DataError& e) {
    spdlog::warn("branch {}: subtopic refinement skipped: {}", parent.label,
                 e.what());
    return subs;
  }
  std::vector<Subtopic> out;
  for (const auto& t : refined.topics) out.push_back({t, {}});
  for (const auto& s : subs) {
    const auto& target = refined.relabel.at(s.topic.label);
    if (target == kRemoved) continue;
    for (auto& o : out) {
      if (o.topic.label == target) add_ids(o.doc_ids, s.doc_ids);
    }
  }
  for (auto& o : out) o.topic.count = o.doc_ids.size();
  return out;
}

}  // namespace

SubtopicResult generate_subtopics(const TopicBranch& branch,
                                  const std::vector<Document>& docs,
                                  llm::Provider& provider,
                                  const HierarchyConfig& config) {
  if (docs.empty()) {
    throw DataError("branch \"" + branch.parent.label + "\" has no documents");
  }
  SubtopicResult result;
  result.branch = branch;
  auto& out = result.branch;
  if (out.doc_ids.empty()) {
    for (const auto& d : docs) out.doc_ids.push_back(d.id);
  }
  const std::set<std::string> allowed(out.doc_ids.begin(), out.doc_ids.end());

  std::vector<Document> views;
  views.reserve(docs.size());
  for (const auto& d : docs) {
    views.push_back(config.max_doc_tokens
                        ? truncate(d, *config.max_doc_tokens, config.estimator)
                        : d);
  }
  const auto chunks = pack_chunks(views, config.chunk_budget, config.estimator);
  result.chunks = chunks.size();

  for (const auto& chunk : chunks) {
    std::string documents;
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      if (k) documents += "\n\n";
      documents += "Document " + std::to_string(k + 1) + ":\n" +
                   views[chunk[k]].text;
    }
    const std::string branch_text =
        render_branch(out.parent, out.seed_subtopics, out.subtopics);

    llm::CompletionRequest req;
    req.stage = "hierarchy";
    req.model = config.model;
    req.max_tokens = config.max_tokens;
    req.prompt = config.prompt.render(
        {{prompts::kBranch, branch_text}, {prompts::kDocuments, documents}});
    req.context = {{prompts::kBranch, branch_text},
                   {prompts::kDocuments, documents},
                   {"parent", out.parent.label}};
    const auto response = provider.complete(req).text;

    for (auto& parsed :
         parse_subtopic_response(response, chunk.size(), &result.rejected)) {
      std::vector<std::string> ids;
      std::string stray;
      for (std::size_t idx : parsed.doc_indices) {
        const auto& id = views[chunk[idx - 1]].id;
        if (!allowed.count(id)) stray = id;
        ids.push_back(id);
      }
      if (!stray.empty()) {
        result.rejected.push_back(
            {format_topic(parsed.topic),
             "GroundingError: document " + stray + " is not in the branch"});
        continue;
      }
      auto existing = std::find_if(
          out.subtopics.begin(), out.subtopics.end(), [&](const Subtopic& s) {
            return text::iequals(s.topic.label, parsed.topic.label);
          });
      if (existing != out.subtopics.end()) {
        add_ids(existing->doc_ids, ids);
        existing->topic.count = existing->doc_ids.size();
        continue;
      }
      Subtopic fresh{parsed.topic, {}};
      for (const auto& seed : out.seed_subtopics) {
        if (text::iequals(seed.label, parsed.topic.label)) {
          fresh.topic = seed;
          fresh.topic.level = 2;
        }
      }
      add_ids(fresh.doc_ids, ids);
      fresh.topic.count = fresh.doc_ids.size();
      out.subtopics.push_back(std::move(fresh));
    }
  }

  if (config.refinement) {
    out.subtopics = refine_subtopics(out.parent, std::move(out.subtopics),
                                     provider, *config.refinement);
  }
  return result;
}

HierarchyResult build_hierarchy(
    const TopicList& top_level, const std::vector<Assignment>& assignments,
    const Corpus& corpus, llm::Provider& provider,
    const HierarchyConfig& config,
    const std::map<std::string, std::vector<Topic>>& seed_subtopics) {
  const auto groups = group_docs_by_topic(assignments);
  std::vector<TopicBranch> branches;
  std::vector<std::vector<Document>> branch_docs;
  for (const auto& t : top_level) {
    if (t.level != 1) continue;
    auto g = groups.find(t.label);
    if (g == groups.end() || g->second.empty()) continue;
    TopicBranch b;
    b.parent = t;
    b.doc_ids = g->second;
    if (auto s = seed_subtopics.find(t.label); s != seed_subtopics.end()) {
      b.seed_subtopics = s->second;
    }
    std::vector<Document> docs;
    for (const auto& id : b.doc_ids) {
      const Document* d = corpus.find(id);
      if (d == nullptr) {
        throw DataError("assigned document \"" + id + "\" is not in the corpus");
      }
      docs.push_back(*d);
    }
    branches.push_back(std::move(b));
    branch_docs.push_back(std::move(docs));
  }

  std::vector<SubtopicResult> results(branches.size());
  for_each_index(branches.size(), provider.max_inflight(), [&](std::size_t i) {
    results[i] = generate_subtopics(branches[i], branch_docs[i], provider, config);
  });

  HierarchyResult out;
  for (auto& r : results) {
    out.branches.push_back(std::move(r.branch));
    out.rejected.insert(out.rejected.end(), r.rejected.begin(), r.rejected.end());
  }
  return out;
}

void write_hierarchy(const std::vector<TopicBranch>& branches,
                     std::ostream& out) {
  for (const auto& b : branches) {
    out << format_topic_with_count(b.parent) << '\n';
    for (const auto& s : b.subtopics) {
      out << "  " << format_topic(s.topic) << " (docs: ";
      for (std::size_t i = 0; i < s.doc_ids.size(); ++i) {
        out << (i ? ", " : "") << s.doc_ids[i];
      }
      out << ")\n";
    }
  }
}

void write_hierarchy(const std::vector<TopicBranch>& branches,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_hierarchy(branches, out);
}

std::vector<TopicBranch> read_hierarchy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open hierarchy file " + path.string());
  static const std::regex kSub(
      R"(^\s+\[(\d+)\]\s*([^:\n]+?)\s*:\s*(.*?)\s*\(docs:\s*([^)]*)\)\s*$)");
  std::vector<TopicBranch> branches;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    std::smatch m;
    if (!line.empty() && (line[0] == ' ' || line[0] == '\t')) {
      if (branches.empty() || !std::regex_match(line, m, kSub)) {
        throw DataError(where + "malformed subtopic line");
      }
      Subtopic s;
      s.topic.level = std::stoi(m[1].str());
      s.topic.label = m[2].str();
      s.topic.description = m[3].str();
      for (const auto& id : text::split(m[4].str(), ',')) {
        auto t = text::trim(id);
        if (!t.empty()) s.doc_ids.emplace_back(t);
      }
      s.topic.count = s.doc_ids.size();
      branches.back().subtopics.push_back(std::move(s));
      continue;
    }
    auto parent = parse_topic_line(line);
    if (!parent) throw DataError(where + "malformed parent line");
    branches.push_back(TopicBranch{*parent, {}, {}, {}});
  }
  return branches;
}

}  // namespace topicllm
