#include "topicllm/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <unordered_set>

#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

namespace topicllm {

using nlohmann::json;

Corpus::Corpus(std::vector<Document> documents, std::string source_path)
    : docs_(std::move(documents)), source_path_(std::move(source_path)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& d : docs_) {
    if (!seen.insert(d.id).second) {
      throw DataError("duplicate document id \"" + d.id + "\"");
    }
  }
}

const Document* Corpus::find(std::string_view id) const {
  for (const auto& d : docs_) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

Corpus parse_corpus(std::istream& in, std::string source_name) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto where = [&] {
      return source_name + ":" + std::to_string(line_no) + ": ";
    };
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where() + "malformed record: " + e.what());
    }
    if (!record.is_object() || !record.contains("id") ||
        !record.contains("text")) {
      throw DataError(where() + "record must be an object with id and text");
    }
    Document doc;
    const auto& id = record["id"];
    if (id.is_string()) {
      doc.id = id.get<std::string>();
    } else if (id.is_number_integer()) {
      doc.id = std::to_string(id.get<long long>());
    } else {
      throw DataError(where() + "id must be a string");
    }
    if (!record["text"].is_string()) {
      throw DataError(where() + "text must be a string");
    }
    doc.text = record["text"].get<std::string>();
    if (text::trim(doc.text).empty()) {
      throw DataError(where() + "document \"" + doc.id + "\" has empty text");
    }
    if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError(where() + "label must be a string");
      doc.label = it->get<std::string>();
    }
    if (!seen.insert(doc.id).second) {
      throw DataError(where() + "duplicate document id \"" + doc.id + "\"");
    }
    docs.push_back(std::move(doc));
  }
  if (docs.empty()) {
    spdlog::warn("corpus {} contains no documents", source_name);
  }
  return Corpus(std::move(docs), std::move(source_name));
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  return parse_corpus(in, path.string());
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus) {
    json record = {{"id", d.id}, {"text", d.text}};
    if (d.label) record["label"] = *d.label;
    out << record.dump() << '\n';
  }
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_corpus(corpus, out);
}

std::size_t TokenEstimator::estimate(std::string_view text) const {
  const auto chars = static_cast<double>(text::codepoint_count(text));
  return static_cast<std::size_t>(std::ceil(chars / chars_per_token));
}

Document truncate(const Document& doc, std::size_t budget,
                  const TokenEstimator& estimator) {
  if (budget == 0) throw DataError("truncation budget must be positive");
  if (estimator.estimate(doc.text) <= budget) return doc;

  // Largest code-point count that still estimates within budget.
  auto max_chars = static_cast<std::size_t>(
      std::floor(static_cast<double>(budget) * estimator.chars_per_token));
  while (max_chars > 0 &&
         std::ceil(static_cast<double>(max_chars) / estimator.chars_per_token) >
             static_cast<double>(budget)) {
    --max_chars;
  }

  const std::string& t = doc.text;
  std::size_t chars = 0;
  std::size_t last_word_end = 0;  // byte offset just past the last whole word
  bool in_word = false;
  std::size_t i = 0;
  for (; i < t.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(t[i]);
    bool space = std::isspace(c) != 0;
    if ((c & 0xC0) != 0x80) {
      if (chars == max_chars) break;
      ++chars;
    }
    if (space && in_word) last_word_end = i;
    in_word = !space;
  }
  if (in_word &&
      (i == t.size() || std::isspace(static_cast<unsigned char>(t[i])))) {
    last_word_end = i;
  }

  Document out = doc;
  if (last_word_end == 0) {
    // A single word longer than the budget: cut at a code-point boundary.
    std::size_t cut = i;
    out.text = t.substr(0, cut);
  } else {
    out.text = t.substr(0, last_word_end);
  }
  out.text = std::string(text::trim(out.text));
  return out;
}

SampleSplit sample(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  if (n == 0 || n > corpus.size()) {
    throw DataError("sample size " + std::to_string(n) +
                    " out of range for corpus of " +
                    std::to_string(corpus.size()));
  }
  std::vector<std::size_t> idx(corpus.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform n-subset.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  std::vector<bool> chosen(corpus.size(), false);
  for (std::size_t i = 0; i < n; ++i) chosen[idx[i]] = true;

  std::vector<Document> picked, rest;
  picked.reserve(n);
  rest.reserve(corpus.size() - n);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (chosen[i] ? picked : rest).push_back(corpus[i]);
  }
  return {Corpus(std::move(picked), corpus.source_path()),
          Corpus(std::move(rest), corpus.source_path())};
}

}  // namespace topicllm
