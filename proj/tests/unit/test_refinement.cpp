#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/mock_provider.hpp"
#include "topicllm/refinement.hpp"

using namespace topicllm;

namespace {

TopicList make(std::vector<std::pair<std::string, std::size_t>> items, int level = 1) {
  TopicList l;
  for (auto& [label, count] : items) l.add({level, label, "About " + label + ".", count});
  return l;
}

std::shared_ptr<llm::MockBackend> unit_vectors(const std::map<std::string, std::vector<double>>& v) {
  auto mock = std::make_shared<llm::MockBackend>();
  for (const auto& [label, vec] : v) mock->set_embedding_preset(label, vec);
  return mock;
}

}  // namespace

TEST_CASE("similar pairs respect the threshold and sort by cosine") {
  // cos(A,B) = 0.9, cos(A,C) = 0.4
  const double s9 = std::sqrt(1 - 0.81), s4 = std::sqrt(1 - 0.16);
  auto mock = unit_vectors({{"A", {1, 0, 0}}, {"B", {0.9, s9, 0}}, {"C", {0.4, 0, s4}}});
  llm::Provider p(mock);
  const auto pairs = similar_pairs(make({{"A", 1}, {"B", 1}, {"C", 1}}), p, "e", 0.5);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].first == "A");
  CHECK(pairs[0].second == "B");
  CHECK(pairs[0].cosine == doctest::Approx(0.9));
  CHECK(similar_pairs(make({{"A", 1}, {"B", 1}, {"C", 1}}), p, "e", 0.3).size() == 3);
  CHECK_THROWS_AS(similar_pairs(make({{"A", 1}}), p, "e", 0.5), DataError);

  TopicList mixed = make({{"A", 1}});
  mixed.add({2, "B", "About B.", 1});
  CHECK(similar_pairs(mixed, p, "e", 0.0).empty());
}

TEST_CASE("merge directives parse like the worked examples") {
  TopicList l = make({{"Employer Taxes", 1}, {"Employment Tax Reporting", 1}, {"Immigration", 1}, {"Voting", 1}});
  const auto d = parse_merge_response(
      "[1] Employment Taxes: Mentions taxation report and requirement for employer "
      "([1] Employer Taxes, [1] Employment Tax Reporting)",
      l);
  REQUIRE(d.size() == 1);
  CHECK(d[0].merged.label == "Employment Taxes");
  CHECK(d[0].merged.description == "Mentions taxation report and requirement for employer");
  CHECK(d[0].sources == std::vector<std::string>{"Employer Taxes", "Employment Tax Reporting"});

  TopicList l2 = make({{"Mathematics", 1}, {"Digital Literacy", 1}, {"Telecommunications", 1}}, 2);
  const auto d2 = parse_merge_response(
      "[2] Technology: Discuss technology and its impact on society. "
      "([2] Digital Literacy, [2] Telecommunications)",
      l2);
  REQUIRE(d2.size() == 1);
  CHECK(d2[0].merged.level == 2);

  CHECK(parse_merge_response("None", l).empty());
  std::vector<RejectedDirective> rejected;
  CHECK(parse_merge_response("[1] X: x ([1] Voting, [1] Nope)\n[1] Y: y ([1] Voting)", l, &rejected)
            .empty());
  CHECK(rejected.size() == 2);
  CHECK(rejected[0].reason.find("hallucinated") != std::string::npos);
  CHECK_THROWS_AS(parse_merge_response("merge them all", l), FormatError);
}

TEST_CASE("apply merges conserves counts and keeps position") {
  const auto l = make({{"A", 3}, {"B", 5}, {"C", 2}, {"D", 7}});
  const auto out = apply_merges(l, {{{1, "AC", "merged", 0}, {"A", "C"}}});
  REQUIRE(out.topics.size() == 3);
  CHECK(out.topics.topics()[0].label == "AC");
  CHECK(out.topics.topics()[0].count == 5);
  CHECK(out.topics.total_count() == l.total_count());
  CHECK(out.relabel.at("A") == "AC");
  CHECK(out.relabel.at("C") == "AC");
  CHECK_FALSE(out.relabel.count("B"));
}

TEST_CASE("chained merges match a union-find oracle") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 50; ++round) {
    std::vector<std::pair<std::string, std::size_t>> items;
    for (int i = 0; i < 8; ++i) items.push_back({"T" + std::to_string(i), rng() % 20 + 1});
    const auto l = make(items);
    oracle::UnionFind uf;
    std::vector<std::string> live;
    for (auto& [label, _] : items) live.push_back(label);
    std::map<std::string, std::size_t> counts;
    for (auto& [label, c] : items) counts[label] = c;

    std::vector<MergeDirective> directives;
    for (int m = 0; m < 4 && live.size() >= 2; ++m) {
      // Sources may be stale labels that were already merged away.
      const auto a = items[rng() % items.size()].first;
      auto b = items[rng() % items.size()].first;
      if (uf.find(a) == uf.find(b)) continue;
      const std::string merged = "M" + std::to_string(round) + "_" + std::to_string(m);
      directives.push_back({{1, merged, "merged", 0}, {a, b}});
      const auto ra = uf.find(a), rb = uf.find(b);
      uf.unite(ra, merged);
      uf.unite(rb, merged);
    }
    const auto out = apply_merges(l, directives);
    CHECK(out.topics.total_count() == l.total_count());
    std::map<std::string, std::size_t> expected;
    for (auto& [label, c] : items) expected[uf.find(label)] += c;
    CHECK(out.topics.size() == expected.size());
    for (const auto& t : out.topics) CHECK(expected[t.label] == t.count);
    for (auto& [label, _] : items) {
      const auto it = out.relabel.find(label);
      const std::string target = it == out.relabel.end() ? label : it->second;
      CHECK(target == uf.find(label));
    }
  }
}

TEST_CASE("pruning thresholds") {
  const auto l = make({{"Big", 40}, {"Mid", 7}, {"Edge", 10}, {"Small", 4}, {"Five", 5}});
  auto at10 = prune_infrequent(l, 10);
  CHECK(at10.size() == 2);
  CHECK(at10.find("Edge", 1) != nullptr);
  auto at5 = prune_infrequent(l, 5);
  CHECK(at5.size() == 4);
  CHECK(at5.find("Small", 1) == nullptr);
  CHECK_THROWS_AS(prune_infrequent(l, 100), DataError);
  TopicList seeded;
  seeded.add_seed({1, "Seed", "s", 0});
  seeded.add({1, "Other", "o", 20});
  CHECK(prune_infrequent(seeded, 1).find("Seed", 1) == nullptr);
}

TEST_CASE("refine end to end with a scripted merge") {
  auto mock = unit_vectors({{"Taxes", {1, 0}}, {"Tax Policy", {0.99, 0.141}}, {"Voting", {0, 1}}});
  mock->enqueue_replies("refinement", {"[1] Taxation: Mentions taxes. ([1] Taxes, [1] Tax Policy)"});
  llm::Provider p(mock);
  RefinementConfig cfg;
  cfg.prune_threshold = 5;
  const auto r = refine(make({{"Taxes", 8}, {"Tax Policy", 4}, {"Voting", 3}}), p, cfg);
  REQUIRE(r.topics.size() == 1);
  CHECK(r.topics.topics()[0].label == "Taxation");
  CHECK(r.topics.topics()[0].count == 12);
  CHECK(r.relabel.at("Taxes") == "Taxation");
  CHECK(r.relabel.at("Tax Policy") == "Taxation");
  CHECK(r.relabel.at("Voting") == kRemoved);
  // The merge prompt mentions only topics from the similar pairs.
  const auto reqs = mock->requests();
  REQUIRE(reqs.size() == 1);
  CHECK(reqs[0].context.at("topics").find("Voting") == std::string::npos);
}

TEST_CASE("merge batches") {
  auto mock = std::make_shared<llm::MockBackend>();
  mock->set_synthesizer([](const llm::CompletionRequest&) { return "None"; });
  llm::Provider p(mock);
  std::vector<SimilarPair> pairs;
  TopicList l;
  for (int i = 0; i < 12; ++i) l.add({1, "T" + std::to_string(i), "d", 1});
  for (int i = 0; i < 11; ++i) pairs.push_back({"T" + std::to_string(i), "T" + std::to_string(i + 1), 0.9});
  const auto r = merge_round(pairs, l, p, MergeRoundConfig{});
  CHECK(r.batches == 3);
  CHECK(mock->requests().size() == 3);
}

TEST_CASE("relabel map file round trip") {
  const auto dir = synthetic::fresh_dir("relabel");
  RelabelMap m{{"A", "B"}, {"C", kRemoved}};
  write_relabel_map(m, dir / "r.tsv");
  CHECK(read_relabel_map(dir / "r.tsv") == m);
}
