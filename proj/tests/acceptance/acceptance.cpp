// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "topicllm/assignment.hpp"
#include "topicllm/cli.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/generation.hpp"
#include "topicllm/hierarchy.hpp"
#include "topicllm/metrics.hpp"
#include "topicllm/mock_provider.hpp"
#include "topicllm/refinement.hpp"
#include "topicllm/sampling.hpp"
#include "topicllm/text.hpp"

namespace fs = std::filesystem;
using namespace topicllm;

namespace {

struct Check {
  std::vector<std::string> failures;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------- 1

void metrics_oracle(Check& c) {
  std::size_t pairs = 0;
  auto compare = [&](const oracle::Labels& a, const oracle::Labels& b) {
    ++pairs;
    const auto r = metrics::alignment_report(oracle::to_clustering(a, "p"),
                                             oracle::to_clustering(b, "t"));
    const double want[] = {oracle::purity(a, b), oracle::purity(b, a), oracle::p1(a, b),
                           oracle::ari(a, b), oracle::nmi(a, b)};
    const double got[] = {r.purity, r.inverse_purity, r.p1, r.ari, r.nmi};
    static const char* names[] = {"purity", "inverse purity", "P1", "ARI", "NMI"};
    for (int i = 0; i < 5; ++i) {
      if (!(std::abs(got[i] - want[i]) <= 1e-9)) {
        c.expect(false, std::string(names[i]) + " differs from the oracle: " + num(got[i]) +
                            " vs " + num(want[i]));
      }
    }
  };
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 500; ++t) {
    const int n = 1 + static_cast<int>(rng() % 12);
    compare(oracle::random_partition(n, rng), oracle::random_partition(n, rng));
  }
  for (int n = 1; n <= 6; ++n) {
    const auto parts = oracle::all_partitions(n);
    for (const auto& a : parts) {
      for (const auto& b : parts) compare(a, b);
    }
  }
  if (c.failures.size() > 5) c.failures.resize(5);
  c.note = std::to_string(pairs) + " pairs";
}

// ---------------------------------------------------------------- 2

void fixed_points(Check& c) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int n = 2 + static_cast<int>(rng() % 11);
    auto truth = oracle::random_partition(n, rng);
    // An all-in-one truth would make the all-in-one prediction identical.
    if (std::all_of(truth.begin(), truth.end(), [&](int x) { return x == truth[0]; })) {
      truth[0] = truth[1] + 1;
    }
    oracle::Labels renamed = truth;
    for (auto& x : renamed) x = 100 - x;
    const auto same = metrics::alignment_report(oracle::to_clustering(renamed, "p"),
                                                oracle::to_clustering(truth, "t"));
    c.expect(same.p1 == 1.0 && same.ari == 1.0 && same.nmi == 1.0,
             "identical partitions gave (" + num(same.p1) + ", " + num(same.ari) + ", " +
                 num(same.nmi) + ")");
    const auto one = metrics::alignment_report(oracle::to_clustering(oracle::Labels(n, 0), "p"),
                                               oracle::to_clustering(truth, "t"));
    c.expect(std::abs(one.ari) <= 1e-12, "all-in-one ARI = " + num(one.ari));
    oracle::Labels singletons(n);
    for (int i = 0; i < n; ++i) singletons[i] = i;
    const auto single = metrics::alignment_report(oracle::to_clustering(singletons, "p"),
                                                  oracle::to_clustering(truth, "t"));
    c.expect(single.purity == 1.0, "all-singleton purity = " + num(single.purity));
  }
  if (c.failures.size() > 5) c.failures.resize(5);
}

// ---------------------------------------------------------------- 3

void sampling(Check& c) {
  const double ez = expected_zero_cells(1100, 102);
  // Independent evaluation: the closed form (K-1)^n / K^(n-1) as a product.
  long double direct = 102.0L;
  for (int i = 0; i < 1100; ++i) direct *= 101.0L / 102.0L;
  c.expect(std::abs(ez - static_cast<double>(direct)) <= 1e-12,
           "closed form " + num(ez) + " vs direct product " + num(static_cast<double>(direct)));
  c.expect(std::abs(ez - 0.00212) / 0.00212 < 0.06,
           "expected zeros " + num(ez) + " is not near 0.00212");

  const std::uint64_t trials = 10'000;
  std::size_t grid_points = 0;
  for (std::uint64_t k : {20, 50, 102}) {
    for (double target : {0.005, 0.01, 0.02}) {
      // n with K (1 - 1/K)^n = target.
      const auto n = static_cast<std::uint64_t>(
          std::ceil(std::log(target / k) / std::log1p(-1.0 / k)));
      const double p = min_empty_probability(n, k, trials, 11 + k);
      const double e = expected_zero_cells(n, k);
      const double se = monte_carlo_stderr(e, trials);
      ++grid_points;
      c.expect(std::abs(p - e) <= 3 * se, "K=" + std::to_string(k) + " n=" + std::to_string(n) +
                                              ": MC " + num(p) + " vs closed form " + num(e) +
                                              " (3 SE = " + num(3 * se) + ")");
    }
  }

  SampleSearch search;
  search.epsilon = 0.0;
  search.trials = trials;
  const auto plan = recommend_sample_size(14290, 140, search);
  c.expect(plan.topic_upper_bound == 102, "K_u = " + std::to_string(plan.topic_upper_bound));
  const auto at1100 = evaluate_sample_size(14290, 140, 1100, search);
  c.expect(at1100.p_star <= 0.01, "p* at 1100 = " + num(at1100.p_star));
  c.note = "E[zeros](1100,102)=" + num(ez) + ", " + std::to_string(grid_points) +
           " grid points, recommended n_s=" + std::to_string(plan.sample_size) +
           ", p*(1100)=" + num(at1100.p_star);
}

// ---------------------------------------------------------------- 4

void parser_fidelity(Check& c) {
  TopicList gen_topics = default_seed_topics();
  const auto g = parse_generation_response(
      "[1] Agriculture: Mentions policies relating to agricultural practices and products.\n"
      "[1] Trade: Mentions the exchange of capital, goods, and services.");
  c.expect(g.size() == 2 && g[0].label == "Agriculture" && g[1].label == "Trade",
           "generation lines");
  c.expect(parse_generation_response("None").empty(), "generation None");

  TopicList merge_topics;
  merge_topics.add({1, "Employer Taxes", "Mentions taxes paid by employers.", 3});
  merge_topics.add({1, "Employment Tax Reporting", "Mentions reporting of payroll tax.", 2});
  const auto m = parse_merge_response(
      "[1] Employment Taxes: Mentions taxation and reporting duties of employers "
      "([1] Employer Taxes, [1] Employment Tax Reporting)",
      merge_topics);
  c.expect(m.size() == 1 && m[0].merged.label == "Employment Taxes" && m[0].sources.size() == 2,
           "merge with sources");

  const auto s = parse_subtopic_response(
      "[1] Trade\n    [2] Exports (Document: 1, 3): Mentions goods sold abroad.\n"
      "    [2] Tariffs (Document: 2): Mentions duties on imports.",
      3);
  c.expect(s.size() == 2 && s[0].doc_indices == std::vector<std::size_t>{1, 3},
           "subtopic with citations");

  TopicList tree;
  tree.add({1, "Agriculture", "Mentions farming.", 1});
  tree.add({1, "Trade", "Mentions trade.", 1});
  tree.add({2, "Exports", "Mentions exports.", 1});
  const Document doc{"d", "The act funds grain storage and expands exports of soybeans.", {}};
  const auto a = parse_assignment_response(
      "[1] Agriculture: Funds grain storage (\"...funds grain storage...\")", tree, doc);
  const auto* entries = std::get_if<std::vector<AssignmentEntry>>(&a);
  c.expect(entries && entries->size() == 1 && (*entries)[0].label == "Agriculture",
           "assignment with quote");

  // Malformed fixtures: parser, input, expected typed outcome.
  struct Fixture {
    const char* parser;
    std::string input;
    std::string expected;
  };
  const std::vector<Fixture> fixtures = {
      {"generation", "", "FormatError"},
      {"generation", "Sure! The topics are below.", "FormatError"},
      {"generation", "[x] Label: description", "FormatError"},
      {"generation", "1. Agriculture - farming", "FormatError"},
      {"merge", "merge everything", "FormatError"},
      {"merge", "[1] New: d ([1] Ghost, [1] Employer Taxes)", "Rejected"},
      {"merge", "[1] New: d ([1] Employer Taxes)", "Rejected"},
      {"subtopic", "random text", "FormatError"},
      {"subtopic", "[2] Far (Document: 9): cites outside", "GroundingError"},
      {"subtopic", "[2] Uncited: nothing", "GroundingError"},
      {"subtopic", "[2] Words (Document: two): unreadable", "GroundingError"},
      {"assignment", "", "InvalidResponse"},
      {"assignment", "None", "InvalidResponse"},
      {"assignment", "[1] Space: x (\"grain\")", "Hallucination"},
      {"assignment", "[1] Trade: no quote at all", "FormatError"},
      {"assignment", "[1] Trade: x (\"imports of steel\")", "QuoteNotFound"},
      {"assignment", "I cannot decide.", "FormatError"},
      {"assignment", "[1] Trade", "InvalidResponse"},
      {"assignment", "[1] Exports: x (\"exports\")", "Hallucination"},
      {"assignment", std::string("\x00\xff[[[ \x01", 8), "FormatError"},
  };
  std::size_t ok = 0;
  for (const auto& f : fixtures) {
    std::string got;
    try {
      const std::string p = f.parser;
      if (p == "generation") {
        parse_generation_response(f.input);
        got = "parsed";
      } else if (p == "merge") {
        std::vector<RejectedDirective> rejected;
        const auto d = parse_merge_response(f.input, merge_topics, &rejected);
        got = d.empty() && rejected.size() == 1 ? "Rejected" : "parsed";
      } else if (p == "subtopic") {
        std::vector<RejectedSubtopic> rejected;
        const auto d = parse_subtopic_response(f.input, 3, &rejected);
        got = d.empty() && rejected.size() == 1
                  ? rejected[0].reason.substr(0, rejected[0].reason.find(':'))
                  : "parsed";
      } else {
        const auto r = parse_assignment_response(f.input, tree, doc);
        const auto* e = std::get_if<AssignmentError>(&r);
        got = e ? to_string(e->kind) : "parsed";
      }
    } catch (const FormatError&) {
      got = "FormatError";
    } catch (const std::exception& e) {
      got = std::string("unexpected exception: ") + e.what();
    }
    if (got == f.expected) {
      ++ok;
    } else {
      c.expect(false, std::string(f.parser) + " fixture \"" + f.input + "\": got " + got +
                          ", expected " + f.expected);
    }
  }
  c.note = std::to_string(ok) + "/" + std::to_string(fixtures.size()) + " malformed fixtures";
}

// ---------------------------------------------------------------- 5

void self_correction(Check& c) {
  TopicList topics;
  for (int i = 0; i < 6; ++i) topics.add({1, "Topic" + std::to_string(i), "d", 1});
  const Document doc{"doc7", "Topic2 appears in this sentence about Topic2.", {}};

  auto run_script = [&] {
    auto mock = std::make_shared<llm::MockBackend>();
    mock->enqueue_replies("assignment",
                          {"[1] Imaginary: x (\"this sentence\")", "None",
                           "[1] Topic2: x (\"...this sentence about...\")"});
    llm::Provider p(mock);
    return assign_with_correction(doc, topics, p, AssignmentConfig{});
  };
  const auto first = run_script();
  c.expect(first.assignment && first.attempts == 3,
           "script finished after " + std::to_string(first.attempts) + " attempts");
  if (first.history.size() == 3) {
    c.expect(first.history[0].error && first.history[0].error->kind == AssignmentErrorKind::kHallucination,
             "attempt 1 not a hallucination");
    c.expect(first.history[1].error && first.history[1].error->kind == AssignmentErrorKind::kInvalidResponse,
             "attempt 2 not invalid");
    c.expect(first.history[0].topic_order != first.history[1].topic_order &&
                 first.history[1].topic_order != first.history[2].topic_order,
             "topic order did not change between attempts");
  } else {
    c.expect(false, "history has " + std::to_string(first.history.size()) + " attempts");
  }
  const auto second = run_script();
  bool same = second.history.size() == first.history.size();
  for (std::size_t i = 0; same && i < first.history.size(); ++i) {
    same = first.history[i].topic_order == second.history[i].topic_order;
  }
  c.expect(same, "shuffles are not reproducible");

  auto mock = std::make_shared<llm::MockBackend>();
  for (int i = 0; i < 10; ++i) mock->enqueue_replies("assignment", {"None"});
  llm::Provider p(mock);
  const auto exhausted = assign_with_correction(doc, topics, p, AssignmentConfig{});
  c.expect(!exhausted.assignment && exhausted.error &&
               exhausted.error->kind == AssignmentErrorKind::kRetryExhausted &&
               exhausted.attempts == 10,
           "10 failures ended at attempt " + std::to_string(exhausted.attempts));
}

// ---------------------------------------------------------------- 6

void quotes(Check& c) {
  const auto corpus = synthetic::corpus(100, 21);
  TopicList topics;
  for (const auto& cls : synthetic::classes()) {
    topics.add({1, cls.name, "Mentions " + cls.name + ".", 1});
  }
  auto mock = std::make_shared<llm::MockBackend>();
  std::atomic<int> calls{0};
  auto base = llm::make_pipeline_synthesizer();
  // Alternate ASCII and Unicode ellipses at the quote boundaries.
  mock->set_synthesizer([&](const llm::CompletionRequest& r) {
    std::string s = base(r);
    if (calls++ % 2) s = text::replace_all(s, "...", "\xE2\x80\xA6");
    return s;
  });
  llm::Provider p(mock);
  const auto clean = assign_corpus(corpus, topics, p, AssignmentConfig{});
  std::size_t verified = 0;
  for (const auto& a : clean.assignments) {
    const auto* d = corpus.find(a.doc_id);
    if (d && a.attempts == 1 && verify_quote(a.entries.at(0).quote, d->text)) ++verified;
  }
  c.expect(verified == 100, std::to_string(verified) + "/100 quotes verified on first attempt");
  c.expect(clean.report.retries.empty(), "retries seen on clean quotes");

  auto fabricated = std::make_shared<llm::MockBackend>();
  fabricated->set_synthesizer(base);
  fabricated->enqueue_replies("assignment",
                              {"[1] " + topics.topics()[0].label +
                               ": x (\"...a sentence that is not in any document...\")"});
  llm::GatewayOptions serial;
  serial.max_inflight = 1;
  llm::Provider fp(fabricated, serial);
  const auto one = assign_corpus(corpus, topics, fp, AssignmentConfig{});
  const auto it = one.report.retries.find("QuoteNotFound");
  const std::size_t qnf = it == one.report.retries.end() ? 0 : it->second;
  std::size_t total_retries = 0;
  for (const auto& [kind, n] : one.report.retries) total_retries += n;
  c.expect(qnf == 1 && total_retries == 1,
           "fabricated quote produced " + std::to_string(qnf) + " QuoteNotFound of " +
               std::to_string(total_retries) + " retries");
  c.expect(one.report.assigned == 100, "fabricated run assigned " +
                                           std::to_string(one.report.assigned));
  c.note = std::to_string(verified) + "/100 verified; fabricated quote -> " +
           std::to_string(qnf) + " QuoteNotFound retry";
}

// ---------------------------------------------------------------- 7

void refinement(Check& c) {
  auto mock = std::make_shared<llm::MockBackend>();
  mock->set_embedding_preset("A", {1, 0, 0});
  mock->set_embedding_preset("B", {0.9, std::sqrt(1 - 0.81), 0});
  mock->set_embedding_preset("C", {0.4, 0, std::sqrt(1 - 0.16)});
  llm::Provider p(mock);
  TopicList abc;
  for (const char* l : {"A", "B", "C"}) abc.add({1, l, "About it.", 20});
  const auto pairs = similar_pairs(abc, p, "embed", 0.5);
  c.expect(pairs.size() == 1 && pairs[0].first == "A" && pairs[0].second == "B",
           std::to_string(pairs.size()) + " pairs above 0.5");

  TopicList prune_list;
  const std::size_t counts[] = {40, 12, 10, 9, 7, 5, 4, 1};
  for (std::size_t i = 0; i < 8; ++i) {
    prune_list.add({1, "P" + std::to_string(i), "d", counts[i]});
  }
  c.expect(prune_infrequent(prune_list, 10).size() == 3, "prune at 10");
  c.expect(prune_infrequent(prune_list, 5).size() == 6, "prune at 5");

  std::mt19937_64 rng(99);
  int rounds = 0;
  for (int round = 0; round < 200; ++round) {
    TopicList l;
    std::vector<std::string> labels;
    for (int i = 0; i < 10; ++i) {
      labels.push_back("T" + std::to_string(i));
      l.add({1, labels.back(), "d", 1 + rng() % 30});
    }
    oracle::UnionFind uf;
    std::vector<MergeDirective> directives;
    for (int m = 0; m < 6; ++m) {
      const auto& a = labels[rng() % labels.size()];
      const auto& b = labels[rng() % labels.size()];
      if (uf.find(a) == uf.find(b)) continue;
      const std::string merged = "M" + std::to_string(m);
      directives.push_back({{1, merged, "merged", 0}, {a, b}});
      const auto ra = uf.find(a), rb = uf.find(b);
      uf.unite(ra, merged);
      uf.unite(rb, merged);
    }
    const auto out = apply_merges(l, directives);
    std::map<std::string, std::size_t> expected;
    for (const auto& t : l) expected[uf.find(t.label)] += t.count;
    bool match = out.topics.total_count() == l.total_count() &&
                 out.topics.size() == expected.size();
    for (const auto& t : out.topics) match = match && expected[t.label] == t.count;
    for (const auto& label : labels) {
      const auto r = out.relabel.find(label);
      match = match && (r == out.relabel.end() ? label : r->second) == uf.find(label);
    }
    c.expect(match, "round " + std::to_string(round) + " differs from union-find");
    ++rounds;
  }
  if (c.failures.size() > 5) c.failures.resize(5);
  c.note = std::to_string(rounds) + " chained-merge rounds";
}

// ---------------------------------------------------------------- 8

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::run(args, o, e);
  if (out) *out = o.str();
  if (code != 0) std::cerr << e.str();
  return code;
}

bool pipeline(const fs::path& dir, const std::vector<std::string>& provider) {
  const std::string corpus = (fs::path(TOPICLLM_TEST_DATA_DIR) / "corpus50.jsonl").string();
  auto with = [&](std::vector<std::string> args) {
    std::vector<std::string> full = provider;
    full.insert(full.end(), args.begin(), args.end());
    return cli(full) == 0;
  };
  const auto d = [&](const char* f) { return (dir / f).string(); };
  return with({"generate", "--corpus", corpus, "--out", d("topics.md")}) &&
         with({"refine", "--topics", d("topics.md"), "--out", d("refined.md")}) &&
         with({"assign", "--corpus", corpus, "--topics", d("refined.md"), "--out",
               d("assign.jsonl")}) &&
         with({"hierarchy", "--corpus", corpus, "--topics", d("refined.md"), "--assignments",
               d("assign.jsonl"), "--out", d("tree.md")}) &&
         with({"evaluate", "--assignments", d("assign.jsonl"), "--labels", corpus, "--out",
               d("eval.json")});
}

void determinism(Check& c) {
  const auto root = synthetic::fresh_dir("acceptance_determinism");
  const auto fixture = (root / "fixture.jsonl").string();
  fs::create_directories(root / "record");
  fs::create_directories(root / "run1");
  fs::create_directories(root / "run2");
  c.expect(pipeline(root / "record", {"--record", fixture, "--log-level", "error"}),
           "recording run failed");
  for (const char* run : {"run1", "run2"}) {
    c.expect(pipeline(root / run, {"--provider", "replay", "--fixture", fixture, "--log-level",
                                   "error"}),
             std::string(run) + " failed");
  }
  for (const char* f : {"topics.md", "refined.md", "assign.jsonl", "tree.md", "eval.json"}) {
    const auto a = slurp(root / "run1" / f), b = slurp(root / "run2" / f);
    c.expect(!a.empty() && a == b, std::string(f) + " differs between runs");
  }
  std::string out;
  c.expect(cli({"stability", "--a", (root / "run1" / "assign.jsonl").string(), "--b",
                (root / "run2" / "assign.jsonl").string()},
               &out) == 0,
           "stability failed");
  if (!out.empty()) {
    const auto j = nlohmann::json::parse(out);
    const double p1 = j.at("p1"), ari = j.at("ari"), nmi = j.at("nmi");
    c.expect(p1 == 1.0 && ari == 1.0 && nmi == 1.0,
             "alignment (" + num(p1) + ", " + num(ari) + ", " + num(nmi) + ")");
    c.note = "alignment (" + num(p1) + ", " + num(ari) + ", " + num(nmi) + ")";
  }
}

// ---------------------------------------------------------------- 9

void drought(Check& c) {
  auto mock = std::make_shared<llm::MockBackend>();
  mock->set_synthesizer(llm::make_pipeline_synthesizer());
  llm::Provider p(mock);
  GenerationConfig cfg;
  cfg.drought_threshold = 100;

  const auto barren = synthetic::barren(150, 3);
  const auto r = generation_pass(barren, default_seed_topics(), p, cfg);
  c.expect(r.stopped_early && r.trace.records.size() == 100,
           "stopped after " + std::to_string(r.trace.records.size()) + " barren documents");

  // One productive document first: the counter starts after it.
  std::vector<Document> docs{synthetic::corpus(1, 4)[0]};
  for (const auto& d : barren) docs.push_back(d);
  const auto r2 = generation_pass(Corpus(docs, "mixed"), default_seed_topics(), p, cfg);
  c.expect(r2.stopped_early && r2.trace.records.size() == 101,
           "mixed run stopped after " + std::to_string(r2.trace.records.size()));

  cfg.drought_threshold.reset();
  const auto r3 = generation_pass(barren, default_seed_topics(), p, cfg);
  c.expect(!r3.stopped_early && r3.trace.records.size() == 150, "no threshold still stopped");
}

// ---------------------------------------------------------------- 10

void grounding(Check& c) {
  const auto corpus = synthetic::corpus(50, 8);
  TopicList top;
  std::vector<Assignment> assignments;
  for (const auto& cls : synthetic::classes()) top.add({1, cls.name, "Mentions it.", 10});
  for (const auto& d : corpus) assignments.push_back({d.id, {{*d.label, "", "", {*d.label}}}, 1, ""});
  auto mock = std::make_shared<llm::MockBackend>();
  mock->set_synthesizer(llm::make_pipeline_synthesizer());
  llm::Provider p(mock);
  HierarchyConfig cfg;
  cfg.chunk_budget = 200;
  const auto h = build_hierarchy(top, assignments, corpus, p, cfg);
  std::size_t subs = 0;
  for (const auto& b : h.branches) {
    const std::set<std::string> parent(b.doc_ids.begin(), b.doc_ids.end());
    for (const auto& s : b.subtopics) {
      ++subs;
      for (const auto& id : s.doc_ids) {
        c.expect(parent.count(id) == 1, s.topic.label + " cites " + id + " outside " +
                                            b.parent.label);
      }
    }
  }
  c.expect(subs > 0, "no subtopics generated");

  // Out-of-chunk citation.
  auto scripted = std::make_shared<llm::MockBackend>();
  scripted->enqueue_replies("hierarchy", {"[1] Trade\n    [2] Exports (Document: 1, 2): ok\n"
                                          "    [2] Phantom (Document: 2, 7): cites past the chunk"});
  llm::Provider sp(scripted);
  TopicBranch branch;
  branch.parent = {1, "Trade", "Mentions trade.", 3};
  const std::vector<Document> docs = {{"t1", "first", {}}, {"t2", "second", {}}, {"t3", "third", {}}};
  const auto r = generate_subtopics(branch, docs, sp, HierarchyConfig{});
  const bool dropped = r.rejected.size() == 1 &&
                       r.rejected[0].reason.rfind("GroundingError", 0) == 0 &&
                       r.rejected[0].line.find("Phantom") != std::string::npos;
  c.expect(dropped, "out-of-chunk citation was not rejected with GroundingError");
  bool persisted = false;
  for (const auto& s : r.branch.subtopics) persisted = persisted || s.topic.label == "Phantom";
  const auto dir = synthetic::fresh_dir("acceptance_grounding");
  write_hierarchy({r.branch}, dir / "tree.md");
  persisted = persisted || slurp(dir / "tree.md").find("Phantom") != std::string::npos;
  c.expect(!persisted, "ungrounded subtopic was persisted");
  c.expect(r.branch.subtopics.size() == 1, "grounded subtopic lost");
  c.note = std::to_string(subs) + " subtopics grounded; out-of-chunk citation dropped";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
    double limit_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"metrics match brute-force oracles", metrics_oracle, 30},
      {"metric fixed points", fixed_points, 0},
      {"sampling math", sampling, 60},
      {"parser fidelity", parser_fidelity, 0},
      {"self-correction", self_correction, 0},
      {"quote verification", quotes, 0},
      {"refinement", refinement, 0},
      {"determinism under the keyed mock", determinism, 0},
      {"topic drought", drought, 0},
      {"hierarchy grounding", grounding, 0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].run(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (criteria[i].limit_seconds > 0 && secs > criteria[i].limit_seconds) {
      c.expect(false, "took " + num(secs) + " s, limit " + num(criteria[i].limit_seconds) + " s");
    }
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    char head[160];
    std::snprintf(head, sizeof head, "[%s] %2zu %s (%.2f s)", ok ? "PASS" : "FAIL", i + 1,
                  criteria[i].name, secs);
    std::cout << head;
    if (!c.note.empty()) std::cout << ": " << c.note;
    std::cout << '\n';
    for (const auto& f : c.failures) std::cout << "       - " << f << '\n';
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed")
            << '\n';
  return failed ? 1 : 0;
}
