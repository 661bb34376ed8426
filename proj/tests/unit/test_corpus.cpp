#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "synthetic.hpp"
#include "topicllm/corpus.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/text.hpp"

using namespace topicllm;

namespace {

Corpus parse(const std::string& s) {
  std::istringstream in(s);
  return parse_corpus(in, "mem");
}

std::string error_of(const std::string& s) {
  try {
    parse(s);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("text helpers") {
  CHECK(text::trim("  a b \n") == "a b");
  CHECK(text::collapse_whitespace(" a\t\n b  c ") == "a b c");
  CHECK(text::iequals("Trade", "tRADE"));
  CHECK_FALSE(text::iequals("Trade", "Trades"));
  CHECK(text::codepoint_count("h\xC3\xA9llo") == 5);
  CHECK(text::split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(text::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(text::sha256_u64("abc") == 0xba7816bf8f01cfeaULL);
}

TEST_CASE("corpus loading keeps order and optional labels") {
  auto c = parse(R"({"id":"b","text":"second","label":"x"}
{"id":"a","text":"first"}

)");
  REQUIRE(c.size() == 2);
  CHECK(c[0].id == "b");
  CHECK(c[0].label == std::optional<std::string>("x"));
  CHECK_FALSE(c[1].label.has_value());
  CHECK(c.find("a")->text == "first");
  CHECK(c.find("zz") == nullptr);
}

TEST_CASE("corpus errors name the problem") {
  CHECK(error_of("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n")
            .find("duplicate document id \"a\"") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\",\"text\":\"   \"}\n").find("empty text") != std::string::npos);
  CHECK(error_of("{\"id\":\"a\"}\n").find(":1:") != std::string::npos);
  CHECK(error_of("\n{oops}\n").find(":2:") != std::string::npos);
  CHECK(error_of("[1,2]\n").find("object") != std::string::npos);
  CHECK(parse("").empty());
}

TEST_CASE("corpus round trip through a file") {
  const auto dir = synthetic::fresh_dir("corpus_roundtrip");
  const auto c = synthetic::corpus(12, 3);
  write_corpus(c, dir / "c.jsonl");
  const auto back = load_corpus(dir / "c.jsonl");
  CHECK(back.documents() == c.documents());
  CHECK_THROWS_AS(load_corpus(dir / "missing.jsonl"), DataError);
}

TEST_CASE("token estimate is ceil(codepoints / 4)") {
  TokenEstimator est;
  CHECK(est.estimate("") == 0);
  CHECK(est.estimate("abcd") == 1);
  CHECK(est.estimate("abcde") == 2);
  CHECK(est.estimate("\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9") == 1);
}

TEST_CASE("truncation keeps whole words within budget") {
  TokenEstimator est;
  Document d{"d", "alpha beta gamma delta", {}};
  CHECK(truncate(d, 100, est).text == d.text);
  const auto cut = truncate(d, 3, est);  // 12 characters
  CHECK(cut.text == "alpha beta");
  CHECK(est.estimate(cut.text) <= 3);
  // A word ending exactly on the limit is kept.
  CHECK(truncate(Document{"d", "abcd efgh ijkl", {}}, 1, est).text == "abcd");
  // One oversized word is cut at a code point boundary.
  const auto hard = truncate(Document{"d", "\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9\xC3\xA9", {}}, 1, est);
  CHECK(text::codepoint_count(hard.text) == 4);
  CHECK_THROWS_AS(truncate(d, 0, est), DataError);
}

TEST_CASE("sampling is uniform, seeded and order preserving") {
  const auto c = synthetic::corpus(100, 1);
  const auto a = sample(c, 30, 9);
  const auto b = sample(c, 30, 9);
  CHECK(a.sample.documents() == b.sample.documents());
  CHECK(a.sample.size() == 30);
  CHECK(a.remainder.size() == 70);
  std::set<std::string> ids;
  for (const auto& d : a.sample) ids.insert(d.id);
  for (const auto& d : a.remainder) ids.insert(d.id);
  CHECK(ids.size() == 100);
  for (std::size_t i = 1; i < a.sample.size(); ++i) {
    CHECK(a.sample[i - 1].id < a.sample[i].id);
  }
  CHECK(sample(c, 100, 1).remainder.empty());
  CHECK_THROWS_AS(sample(c, 0, 1), DataError);
  CHECK_THROWS_AS(sample(c, 101, 1), DataError);
}

TEST_CASE("overlap of two independent samples matches the hypergeometric law") {
  const std::size_t n_docs = 10'000, n = 1000;
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n_docs; ++i) docs.push_back({std::to_string(i), "x", {}});
  const Corpus c(std::move(docs), "big");
  const auto a = sample(c, n, 1);
  const auto b = sample(c, n, 2);
  std::set<std::string> ids;
  for (const auto& d : a.sample) ids.insert(d.id);
  std::size_t common = 0;
  for (const auto& d : b.sample) common += ids.count(d.id);
  // Hypergeometric: draws n from N with n marked.
  const double N = n_docs, K = n, k = n;
  const double mean = k * K / N;
  const double var = k * (K / N) * ((N - K) / N) * ((N - k) / (N - 1));
  CHECK(std::abs(static_cast<double>(common) - mean) <= 3 * std::sqrt(var));
}
