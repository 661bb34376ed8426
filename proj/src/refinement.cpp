#include "topicllm/refinement.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <iterator>
#include <optional>
#include <fstream>
#include <regex>
#include <set>

#include "topicllm/concurrency.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/kernels.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

std::vector<SimilarPair> similar_pairs(const TopicList& topics,
                                       llm::Provider& provider,
                                       const std::string& embedding_model,
                                       double threshold) {
  if (topics.size() < 2) {
    throw DataError("similarity pairing needs at least two topics");
  }
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw DataError("similarity threshold must lie in [-1, 1]");
  }
  std::vector<std::string> texts;
  texts.reserve(topics.size());
  for (const auto& t : topics) texts.push_back(t.label + ": " + t.description);
  auto vectors = provider.embed(embedding_model, texts, "refinement");

  kernels::RowMatrix m;
  m.rows = vectors.size();
  m.cols = vectors.front().values.size();
  m.data.reserve(m.rows * m.cols);
  for (const auto& v : vectors) {
    m.data.insert(m.data.end(), v.values.begin(), v.values.end());
  }
  const auto cos = kernels::parallel::cosine_matrix(m);

  const auto& list = topics.topics();
  std::vector<SimilarPair> pairs;
  for (std::size_t i = 0; i < list.size(); ++i) {
    for (std::size_t j = i + 1; j < list.size(); ++j) {
      if (list[i].level != list[j].level) continue;
      const double c = cos[i * m.rows + j];
      if (c >= threshold) pairs.push_back({list[i].label, list[j].label, c});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const SimilarPair& a, const SimilarPair& b) {
                     return a.cosine > b.cosine;
                   });
  return pairs;
}

namespace {

bool is_none(std::string_view s) {
  auto t = text::trim(s);
  while (!t.empty() && (t.back() == '.' || t.back() == '"')) t.remove_suffix(1);
  while (!t.empty() && t.front() == '"') t.remove_prefix(1);
  return text::iequals(t, "none");
}

struct SourceRef {
  std::optional<int> level;
  std::string label;
};

SourceRef parse_source(std::string_view raw) {
  static const std::regex kSource(R"(^\s*(?:\[(\d+)\])?\s*(.*?)\s*$)");
  std::string s(raw);
  std::smatch m;
  SourceRef ref;
  if (std::regex_match(s, m, kSource)) {
    if (m[1].matched) ref.level = std::stoi(m[1].str());
    ref.label = m[2].str();
  } else {
    ref.label = std::string(text::trim(raw));
  }
  return ref;
}

}  // namespace

std::vector<MergeDirective> parse_merge_response(
    const std::string& response, const TopicList& topics,
    std::vector<RejectedDirective>* rejected) {
  if (is_none(response)) return {};
  static const std::regex kLine(
      R"(^\s*\[(\d+)\]\s*([^:\n]+?)\s*:\s*(.*?)\s*\(([^()]*)\)\s*$)");

  auto reject = [&](const std::string& line, const std::string& reason) {
    spdlog::warn("dropping merge directive \"{}\": {}", line, reason);
    if (rejected) rejected->push_back({line, reason});
  };

  std::vector<MergeDirective> directives;
  std::size_t matched = 0;
  for (const auto& line : text::split_lines(response)) {
    if (text::trim(line).empty()) continue;
    std::smatch m;
    if (!std::regex_match(line, m, kLine)) {
      if (!is_none(line)) spdlog::warn("skipping unparseable merge line: {}", line);
      continue;
    }
    ++matched;
    MergeDirective d;
    d.merged.level = std::stoi(m[1].str());
    d.merged.label = std::string(text::trim(m[2].str()));
    d.merged.description = std::string(text::trim(m[3].str()));

    std::vector<std::string> labels;
    std::string problem;
    std::optional<int> level;
    for (const auto& raw : text::split(m[4].str(), ',')) {
      if (text::trim(raw).empty()) continue;
      auto ref = parse_source(raw);
      const int ref_level = ref.level.value_or(d.merged.level);
      const Topic* t = topics.find(ref.label, ref_level);
      if (t == nullptr) {
        const Topic* any = topics.find_any(ref.label);
        problem = any ? "source \"" + ref.label + "\" is on a different level"
                      : "hallucinated source \"" + ref.label + "\"";
        break;
      }
      if (level && *level != t->level) {
        problem = "sources span more than one level";
        break;
      }
      level = t->level;
      if (std::none_of(labels.begin(), labels.end(), [&](const auto& l) {
            return text::iequals(l, t->label);
          })) {
        labels.push_back(t->label);
      }
    }
    if (problem.empty() && labels.size() < 2) {
      problem = "a merge needs at least two distinct sources";
    }
    if (problem.empty() && d.merged.description.empty()) {
      problem = "merged topic has no description";
    }
    if (!problem.empty()) {
      reject(line, problem);
      continue;
    }
    d.merged.level = *level;
    d.sources = std::move(labels);
    directives.push_back(std::move(d));
  }
  if (matched == 0) {
    throw FormatError("no merge directive in response: \"" +
                      std::string(text::trim(response)).substr(0, 120) + "\"");
  }
  return directives;
}

MergeRoundResult merge_round(const std::vector<SimilarPair>& pairs,
                             const TopicList& topics, llm::Provider& provider,
                             const MergeRoundConfig& config) {
  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  const std::size_t n_batches = (pairs.size() + batch - 1) / batch;

  struct BatchOut {
    std::vector<MergeDirective> directives;
    std::vector<RejectedDirective> rejected;
  };
  std::vector<BatchOut> outs(n_batches);

  for_each_index(n_batches, provider.max_inflight(), [&](std::size_t b) {
    std::vector<const Topic*> mentioned;
    auto mention = [&](const std::string& label) {
      const Topic* t = topics.find_any(label);
      if (t && std::find(mentioned.begin(), mentioned.end(), t) == mentioned.end()) {
        mentioned.push_back(t);
      }
    };
    const auto last = std::min(pairs.size(), (b + 1) * batch);
    for (std::size_t i = b * batch; i < last; ++i) {
      mention(pairs[i].first);
      mention(pairs[i].second);
    }
    std::string lines;
    for (const Topic* t : mentioned) {
      if (!lines.empty()) lines += '\n';
      lines += format_topic(*t);
    }
    llm::CompletionRequest req;
    req.stage = "refinement";
    req.model = config.model;
    req.max_tokens = config.max_tokens;
    req.prompt = config.prompt.render({{prompts::kTopics, lines}});
    req.context = {{prompts::kTopics, lines}};
    const auto response = provider.complete(req).text;
    outs[b].directives =
        parse_merge_response(response, topics, &outs[b].rejected);
  });

  MergeRoundResult result;
  result.batches = n_batches;
  for (auto& o : outs) {
    std::move(o.directives.begin(), o.directives.end(),
              std::back_inserter(result.directives));
    std::move(o.rejected.begin(), o.rejected.end(),
              std::back_inserter(result.rejected));
  }
  return result;
}

MergeOutcome apply_merges(const TopicList& topics,
                          const std::vector<MergeDirective>& directives) {
  std::vector<Topic> current = topics.topics();
  std::vector<std::string> seeds = topics.seed_labels();
  // Lowercased label -> lowercased label it was merged into.
  std::map<std::string, std::string> parent;

  auto resolve = [&](std::string key) {
    for (auto it = parent.find(key); it != parent.end(); it = parent.find(key)) {
      key = it->second;
    }
    return key;
  };
  auto index_of = [&](const std::string& lower) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (text::to_lower(current[i].label) == lower) return i;
    }
    return std::nullopt;
  };

  for (const auto& d : directives) {
    std::vector<std::size_t> reps;
    auto add_rep = [&](std::size_t i) {
      if (std::find(reps.begin(), reps.end(), i) == reps.end()) reps.push_back(i);
    };
    for (const auto& src : d.sources) {
      if (auto i = index_of(resolve(text::to_lower(src)))) {
        add_rep(*i);
      } else {
        spdlog::warn("merge source \"{}\" no longer exists; ignoring", src);
      }
    }
    if (reps.empty()) continue;
    const int level = current[reps.front()].level;
    if (std::any_of(reps.begin(), reps.end(),
                    [&](std::size_t i) { return current[i].level != level; })) {
      spdlog::warn("cross-level merge into \"{}\" rejected", d.merged.label);
      continue;
    }
    const std::string merged_key = text::to_lower(d.merged.label);
    // A topic already carrying the merged label is folded in as well.
    if (auto i = index_of(merged_key); i && current[*i].level == level) add_rep(*i);

    Topic merged = d.merged;
    merged.level = level;
    merged.count = 0;
    parent.erase(merged_key);  // the label is live again
    bool any_seed = false;
    for (std::size_t i : reps) {
      merged.count += current[i].count;
      const std::string key = text::to_lower(current[i].label);
      if (key != merged_key) parent[key] = merged_key;
      auto s = std::find_if(seeds.begin(), seeds.end(), [&](const auto& l) {
        return text::iequals(l, current[i].label);
      });
      if (s != seeds.end()) {
        any_seed = true;
        seeds.erase(s);
      }
    }
    if (any_seed) seeds.push_back(merged.label);

    std::sort(reps.begin(), reps.end());
    const std::size_t pos = reps.front();
    for (auto it = reps.rbegin(); it != reps.rend(); ++it) {
      current.erase(current.begin() + static_cast<std::ptrdiff_t>(*it));
    }
    current.insert(current.begin() + static_cast<std::ptrdiff_t>(pos),
                   std::move(merged));
  }

  MergeOutcome out;
  for (auto& t : current) out.topics.mutable_topics().push_back(std::move(t));
  out.topics.set_seed_labels(std::move(seeds));
  for (const auto& t : topics) {
    const std::string key = resolve(text::to_lower(t.label));
    const Topic* survivor = out.topics.find_any(key);
    if (survivor && survivor->label != t.label) {
      out.relabel[t.label] = survivor->label;
    }
  }
  return out;
}

TopicList prune_infrequent(const TopicList& topics, std::size_t threshold) {
  TopicList out;
  std::vector<std::string> seeds;
  for (const auto& t : topics) {
    if (t.count < threshold) continue;
    if (topics.is_seed(t.label)) seeds.push_back(t.label);
    out.mutable_topics().push_back(t);
  }
  out.set_seed_labels(std::move(seeds));
  if (out.empty()) {
    throw DataError("pruning at threshold " + std::to_string(threshold) +
                    " removed every topic");
  }
  return out;
}

RelabelMap complete_relabel(const TopicList& original, const RelabelMap& merges,
                            const TopicList& final_topics) {
  RelabelMap total;
  for (const auto& t : original) {
    auto it = merges.find(t.label);
    const std::string& target = it == merges.end() ? t.label : it->second;
    const Topic* survivor = final_topics.find_any(target);
    total[t.label] = survivor ? survivor->label : kRemoved;
  }
  return total;
}

RefinementResult refine(const TopicList& topics, llm::Provider& provider,
                        const RefinementConfig& config) {
  RefinementResult result;
  TopicList current = topics;
  RelabelMap merges;  // original label -> current label, changed ones only

  for (std::size_t round = 0; round < std::max<std::size_t>(1, config.iterations);
       ++round) {
    if (current.size() < 2) break;
    auto pairs = similar_pairs(current, provider, config.embedding_model,
                               config.similarity_threshold);
    if (pairs.empty()) break;
    auto merged = merge_round(pairs, current, provider, config.merge);
    result.pairs.insert(result.pairs.end(), pairs.begin(), pairs.end());
    result.rejected.insert(result.rejected.end(), merged.rejected.begin(),
                           merged.rejected.end());
    if (merged.directives.empty()) break;
    auto outcome = apply_merges(current, merged.directives);
    result.directives.insert(result.directives.end(),
                             merged.directives.begin(),
                             merged.directives.end());
    for (const auto& t : topics) {
      auto it = merges.find(t.label);
      const std::string now = it == merges.end() ? t.label : it->second;
      auto next = outcome.relabel.find(now);
      if (next != outcome.relabel.end()) merges[t.label] = next->second;
    }
    current = std::move(outcome.topics);
  }

  result.topics = prune_infrequent(current, config.prune_threshold);
  result.relabel = complete_relabel(topics, merges, result.topics);
  return result;
}

void write_relabel_map(const RelabelMap& map, std::ostream& out) {
  for (const auto& [from, to] : map) out << from << '\t' << to << '\n';
}

void write_relabel_map(const RelabelMap& map,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_relabel_map(map, out);
}

RelabelMap read_relabel_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open relabel map " + path.string());
  RelabelMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != 2) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected two tab-separated columns");
    }
    map[cols[0]] = cols[1];
  }
  return map;
}

}  // namespace topicllm
