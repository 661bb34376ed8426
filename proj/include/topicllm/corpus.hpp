#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topicllm {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> label;

  friend bool operator==(const Document&, const Document&) = default;
};

/// Documents in load order. Ids are unique.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, std::string source_path);

  const std::vector<Document>& documents() const noexcept { return docs_; }
  const std::string& source_path() const noexcept { return source_path_; }
  std::size_t size() const noexcept { return docs_.size(); }
  bool empty() const noexcept { return docs_.empty(); }

  const Document& operator[](std::size_t i) const { return docs_[i]; }
  const Document* find(std::string_view id) const;

  auto begin() const noexcept { return docs_.begin(); }
  auto end() const noexcept { return docs_.end(); }

 private:
  std::vector<Document> docs_;
  std::string source_path_;
};

/// Reads one JSON object per line: {"id", "text", "label"?}. Blank lines are
/// skipped. Throws DataError on a missing file, a malformed line (with its
/// 1-based number), empty text, or a duplicate id. An empty file loads as an
/// empty corpus with a logged warning.
Corpus load_corpus(const std::filesystem::path& path);
Corpus parse_corpus(std::istream& in, std::string source_name);

void write_corpus(const Corpus& corpus, std::ostream& out);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Provider-independent token estimate: ceil(codepoints / chars_per_token).
struct TokenEstimator {
  double chars_per_token = 4.0;

  std::size_t estimate(std::string_view text) const;
};

/// Cuts `doc.text` to the longest whitespace-word prefix whose estimate fits
/// `budget`. Documents already under budget are returned unchanged. A first
/// word that alone exceeds the budget is cut at a code-point boundary.
Document truncate(const Document& doc, std::size_t budget,
                  const TokenEstimator& estimator = {});

struct SampleSplit {
  Corpus sample;
  Corpus remainder;
};

/// Uniform draw of `n` documents without replacement. Both halves keep load
/// order. Throws DataError unless 0 < n <= corpus.size().
SampleSplit sample(const Corpus& corpus, std::size_t n, std::uint64_t seed);

}  // namespace topicllm
