#include <doctest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/metrics.hpp"

using namespace topicllm;
using namespace topicllm::metrics;

namespace {

AlignmentReport report(const oracle::Labels& pred, const oracle::Labels& truth) {
  return alignment_report(oracle::to_clustering(pred, "p"), oracle::to_clustering(truth, "t"));
}

}  // namespace

TEST_CASE("hand-computed values") {
  // pred {a,a,b,b}, truth {x,x,x,y}
  const auto r = report({0, 0, 1, 1}, {0, 0, 0, 1});
  CHECK(r.purity == doctest::Approx(0.75));
  CHECK(r.inverse_purity == doctest::Approx(0.75));
  CHECK(r.items == 4);

  // All-in-one prediction against n singletons: P1 = 2 / (n + 1).
  for (int n = 2; n <= 9; ++n) {
    const auto single = report(oracle::Labels(n, 0), [&] {
      oracle::Labels v(n);
      for (int i = 0; i < n; ++i) v[i] = i;
      return v;
    }());
    CHECK(single.p1 == doctest::Approx(2.0 / (n + 1)));
    CHECK(single.purity == doctest::Approx(1.0 / n));
    CHECK(single.ari == 0.0);
    CHECK(single.nmi == 0.0);
  }
}

TEST_CASE("fixed points") {
  const oracle::Labels truth = {0, 0, 1, 1, 1, 2, 3, 3};
  const auto same = report({5, 5, 2, 2, 2, 0, 1, 1}, truth);
  CHECK(same.p1 == 1.0);
  CHECK(same.ari == 1.0);
  CHECK(same.nmi == 1.0);
  CHECK(same.purity == 1.0);
  CHECK(std::abs(report(oracle::Labels(8, 0), truth).ari) <= 1e-12);
  CHECK(report({0, 1, 2, 3, 4, 5, 6, 7}, truth).purity == 1.0);
}

TEST_CASE("exhaustive sweep against brute force") {
  for (int n = 1; n <= 5; ++n) {
    const auto parts = oracle::all_partitions(n);
    for (const auto& a : parts) {
      for (const auto& b : parts) {
        const auto r = report(a, b);
        CHECK(std::abs(r.purity - oracle::purity(a, b)) <= 1e-9);
        CHECK(std::abs(r.inverse_purity - oracle::purity(b, a)) <= 1e-9);
        CHECK(std::abs(r.p1 - oracle::p1(a, b)) <= 1e-9);
        CHECK(std::abs(r.ari - oracle::ari(a, b)) <= 1e-9);
        CHECK(std::abs(r.nmi - oracle::nmi(a, b)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("symmetry and range properties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 11);
    const auto a = oracle::random_partition(n, rng);
    const auto b = oracle::random_partition(n, rng);
    const auto ab = report(a, b), ba = report(b, a);
    CHECK(ab.ari == doctest::Approx(ba.ari).epsilon(1e-12));
    CHECK(ab.nmi == doctest::Approx(ba.nmi).epsilon(1e-12));
    CHECK(ab.purity == doctest::Approx(ba.inverse_purity));
    for (double v : {ab.purity, ab.inverse_purity, ab.p1, ab.nmi}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(ab.ari <= 1.0);
  }
}

TEST_CASE("contingency errors and helpers") {
  CHECK_THROWS_AS(contingency({}, {{"a", "x"}}), DataError);
  CHECK_THROWS_AS(contingency({{"a", "x"}, {"b", "y"}}, {{"a", "x"}, {"c", "y"}}), DataError);
  try {
    contingency({{"a", "x"}, {"b", "y"}}, {{"a", "x"}, {"c", "y"}});
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("b") != std::string::npos);
  }

  const auto t = table_from_counts({{2, 0, 0}, {1, 1, 0}});
  CHECK(t.col_labels.size() == 2);
  CHECK(t.total == 4);
  CHECK(purity(t) == doctest::Approx(0.75));
  CHECK(purity(t.transposed()) == doctest::Approx(inverse_purity(t)));

  Clustering a{{"x", "1"}, {"y", "1"}, {"z", "2"}};
  Clustering b{{"y", "A"}, {"z", "B"}, {"w", "B"}};
  CHECK(restrict_to_common(a, b) == 2);
  CHECK(a.size() == 2);
  CHECK(b.size() == 2);

  const auto c = argmax_clustering({{"d1", {0.2, 0.5, 0.3}}, {"d2", {0.4, 0.4, 0.2}}});
  CHECK(c.at("d1") == "topic_1");
  CHECK(c.at("d2") == "topic_0");
  CHECK(argmax_clustering({{"d", {0.1, 0.9}}}, {"a", "b"}).at("d") == "b");
}

TEST_CASE("clusterings from assignments and label files") {
  std::vector<Assignment> as = {{"d1", {{"Exports", "", "", {"Trade", "Exports"}}}, 1, ""},
                                {"d2", {{"Health", "", "", {"Health"}}}, 1, ""}};
  const auto c = clustering_from_assignments(as);
  CHECK(c.at("d1") == "Exports");
  as.push_back({"d3", {{"A", "", "", {"A"}}, {"B", "", "", {"B"}}}, 1, ""});
  CHECK_THROWS_AS(clustering_from_assignments(as), DataError);

  const auto dir = synthetic::fresh_dir("labels");
  {
    std::ofstream(dir / "l.tsv") << "d1\tTrade\nd2\tHealth\n";
    std::ofstream(dir / "l.jsonl") << R"({"id":"d1","text":"t","label":"Trade"})" << "\n";
    std::ofstream(dir / "dup.tsv") << "d1\tA\nd1\tB\n";
    std::ofstream(dir / "nolabel.jsonl") << R"({"id":"d1","text":"t"})" << "\n";
  }
  CHECK(read_labels(dir / "l.tsv").size() == 2);
  CHECK(read_labels(dir / "l.jsonl").at("d1") == "Trade");
  CHECK_THROWS_AS(read_labels(dir / "dup.tsv"), DataError);
  CHECK_THROWS_AS(read_labels(dir / "nolabel.jsonl"), DataError);
  CHECK_THROWS_AS(read_labels(dir / "missing.tsv"), DataError);
}
