#pragma once

// Synthetic corpora with class-specific vocabulary. The pipeline synthesizer
// picks the most frequent long word, so every document's class keyword wins
// and its subtopic keyword comes second.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "topicllm/corpus.hpp"

namespace synthetic {

struct ClassSpec {
  std::string name;
  std::vector<std::string> vocab;  // first two words are subtopic keywords
};

inline const std::vector<ClassSpec>& classes() {
  static const std::vector<ClassSpec> kClasses = {
      {"farming", {"harvest", "cattle", "irrigation", "grain", "dairy"}},
      {"tariffs", {"import", "customs", "duties", "quota", "export"}},
      {"health", {"hospital", "vaccine", "clinic", "nurses", "patients"}},
      {"schools", {"teachers", "students", "classroom", "tuition", "literacy"}},
      {"energy", {"pipeline", "solar", "turbine", "utility", "reactor"}},
  };
  return kClasses;
}

inline const std::vector<std::string>& filler() {
  static const std::vector<std::string> kWords = {
      "the", "a",  "of", "to",  "and", "in",  "for", "on",  "by", "at", "is",
      "it",  "as", "be", "was", "new", "act", "with", "from", "or", "an", "all"};
  return kWords;
}

/// Document i belongs to class i mod `class_count`, labeled with its name.
inline topicllm::Corpus corpus(std::size_t n, std::uint64_t seed,
                               std::size_t class_count = 5) {
  std::mt19937_64 rng(seed);
  std::vector<topicllm::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& spec = classes()[i % class_count];
    const auto& sub = spec.vocab[rng() % 2];
    std::vector<std::string> words(4, spec.name);
    words.insert(words.end(), 3, sub);
    for (std::size_t w = 2; w < spec.vocab.size(); ++w) words.push_back(spec.vocab[w]);
    for (int f = 0; f < 30; ++f) words.push_back(filler()[rng() % filler().size()]);
    std::shuffle(words.begin(), words.end(), rng);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    text += ".";
    char id[16];
    std::snprintf(id, sizeof id, "doc%03zu", i);
    docs.push_back({id, text, spec.name});
  }
  return topicllm::Corpus(std::move(docs), "synthetic");
}

/// Documents made only of short filler words: no keyword, no topic.
inline topicllm::Corpus barren(std::size_t n, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::vector<topicllm::Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    for (int f = 0; f < 20; ++f) {
      text += (text.empty() ? "" : " ") + filler()[rng() % filler().size()];
    }
    docs.push_back({"barren" + std::to_string(i), text, std::nullopt});
  }
  return topicllm::Corpus(std::move(docs), "barren");
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "topicllm_tests" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace synthetic
