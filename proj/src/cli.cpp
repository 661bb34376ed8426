#include "topicllm/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "topicllm/assignment.hpp"
#include "topicllm/config.hpp"
#include "topicllm/corpus.hpp"
#include "topicllm/errors.hpp"
#include "topicllm/generation.hpp"
#include "topicllm/hierarchy.hpp"
#include "topicllm/http_backend.hpp"
#include "topicllm/metrics.hpp"
#include "topicllm/mock_provider.hpp"
#include "topicllm/refinement.hpp"
#include "topicllm/replay.hpp"
#include "topicllm/sampling.hpp"
#include "topicllm/text.hpp"

namespace topicllm::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return text::sha256_hex(buf.str());
}

json usage_json(const llm::UsageRecord& u) {
  return {{"prompt_tokens", u.prompt_tokens},
          {"completion_tokens", u.completion_tokens},
          {"request_count", u.request_count},
          {"estimated_cost", u.estimated_cost}};
}

llm::UsageRecord usage_from_json(const json& j) {
  llm::UsageRecord u;
  u.prompt_tokens = j.value("prompt_tokens", 0ULL);
  u.completion_tokens = j.value("completion_tokens", 0ULL);
  u.request_count = j.value("request_count", 0ULL);
  u.estimated_cost = j.value("estimated_cost", 0.0);
  return u;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Everything a subcommand needs: the validated config and a lazily built
/// provider.
class Session {
 public:
  Session(PipelineConfig config, std::shared_ptr<llm::Backend> backend)
      : config_(std::move(config)), override_(std::move(backend)) {}

  const PipelineConfig& config() const { return config_; }

  TokenEstimator estimator() const {
    return TokenEstimator{static_cast<double>(config_.chars_per_token)};
  }

  llm::Provider& provider() {
    if (!provider_) provider_ = std::make_unique<llm::Provider>(make_backend(), options());
    return *provider_;
  }

  bool has_provider() const { return provider_ != nullptr; }

  /// Writes the run manifest; inputs and outputs are keyed by file name.
  void write_manifest(const fs::path& path, const std::string& command,
                      const std::vector<fs::path>& inputs,
                      const std::vector<fs::path>& outputs, json seeds) const {
    json in = json::object();
    for (const auto& p : inputs) in[p.filename().string()] = file_sha256(p);
    json outs = json::object();
    for (const auto& p : outputs) outs[p.filename().string()] = file_sha256(p);
    json usage = json::object();
    llm::UsageRecord total;
    if (provider_) {
      for (const auto& [stage, u] : provider_->usage_by_stage()) {
        usage[stage] = usage_json(u);
      }
      total = provider_->usage_report();
    }
    write_json({{"command", command},
                {"config_sha256", config_hash(config_)},
                {"provider", config_.provider.kind},
                {"seeds", std::move(seeds)},
                {"inputs", in},
                {"outputs", outs},
                {"usage", usage},
                {"total", usage_json(total)}},
               path);
  }

 private:
  llm::GatewayOptions options() const {
    llm::GatewayOptions o;
    o.retry = config_.provider.retry;
    o.max_inflight = config_.provider.max_inflight;
    o.min_interval = std::chrono::milliseconds(config_.provider.min_interval_ms);
    for (const auto& [model, rate] : config_.provider.rates) o.rates.set(model, rate);
    o.estimator = estimator();
    return o;
  }

  std::shared_ptr<llm::Backend> make_backend() const {
    std::shared_ptr<llm::Backend> backend = override_;
    const auto& p = config_.provider;
    if (!backend) {
      if (p.kind == "openai") {
        llm::HttpBackendOptions h;
        h.base_url = p.base_url;
        h.path_prefix = p.path_prefix;
        h.api_key_env = p.api_key_env;
        h.timeout = std::chrono::seconds(p.timeout_seconds);
        backend = std::make_shared<llm::HttpBackend>(h);
      } else if (p.kind == "replay") {
        backend = llm::load_fixture(p.fixture);
      } else {
        auto mock = p.fixture.empty() ? std::make_shared<llm::MockBackend>()
                                      : llm::load_fixture(p.fixture);
        mock->set_synthesizer(llm::make_pipeline_synthesizer());
        backend = mock;
      }
    }
    if (!p.record.empty()) {
      backend = std::make_shared<llm::RecordingBackend>(backend, p.record);
    }
    return backend;
  }

  PipelineConfig config_;
  std::shared_ptr<llm::Backend> override_;
  std::unique_ptr<llm::Provider> provider_;
};

PromptTemplate load_prompt(const std::string& path, PromptTemplate fallback,
                           std::vector<std::string> required) {
  if (path.empty()) return fallback;
  return PromptTemplate::from_file(path, std::move(required));
}

std::optional<std::size_t> budget(std::size_t tokens) {
  if (tokens == 0) return std::nullopt;
  return tokens;
}

/// Level-1 lines open a branch; the level-2 lines below them are its seeds.
std::map<std::string, std::vector<Topic>> read_seed_subtopics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open seed subtopics " + path.string());
  std::map<std::string, std::vector<Topic>> out;
  std::string line, parent;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto t = parse_topic_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (!t) throw DataError(where + ": malformed topic line");
    if (t->level == 1) {
      parent = t->label;
      out[parent];
    } else if (parent.empty()) {
      throw DataError(where + ": subtopic before any parent topic");
    } else {
      out[parent].push_back(*t);
    }
  }
  return out;
}

json report_json(const metrics::AlignmentReport& r) {
  return {{"purity", r.purity}, {"inverse_purity", r.inverse_purity},
          {"p1", r.p1},         {"ari", r.ari},
          {"nmi", r.nmi},       {"items", r.items}};
}

json plan_json(const SampleSizePlan& p) {
  return {{"corpus_size", p.corpus_size},
          {"min_topic_docs", p.min_topic_docs},
          {"topic_upper_bound", p.topic_upper_bound},
          {"sample_size", p.sample_size},
          {"epsilon", p.epsilon},
          {"p_star", p.p_star},
          {"p_empty", p.p_empty},
          {"expected_zero_cells", p.expected_zero_cells},
          {"trials", p.trials}};
}

fs::path manifest_for(const std::string& explicit_path, const fs::path& out) {
  if (!explicit_path.empty()) return explicit_path;
  return fs::path(out.string() + ".manifest.json");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err, std::shared_ptr<llm::Backend> backend) {
  CLI::App app{"LLM-driven topic modeling pipeline"};
  app.require_subcommand(1);
  std::string config_path, provider_kind, fixture, record, manifest_path;
  std::string log_level = "info";
  app.add_option("--config", config_path, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--provider", provider_kind, "Override provider.kind: mock, openai or replay");
  app.add_option("--fixture", fixture, "Override provider.fixture");
  app.add_option("--record", record, "Append every provider call to this file");
  app.add_option("--manifest", manifest_path, "Manifest path (default: <output>.manifest.json)");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off");

  // plan-sample
  auto* plan = app.add_subcommand("plan-sample", "Recommend a generation sample size");
  std::string plan_corpus, plan_out;
  std::uint64_t plan_size = 0, plan_min_docs = 0, plan_fixed = 0;
  SampleSearch search;
  auto* plan_corpus_opt = plan->add_option("--corpus", plan_corpus, "Corpus to size (JSONL)")
                              ->check(CLI::ExistingFile);
  plan->add_option("--corpus-size", plan_size, "Corpus size, instead of --corpus")
      ->excludes(plan_corpus_opt);
  plan->add_option("--min-topic-docs", plan_min_docs, "Documents on the rarest topic")->required();
  plan->add_option("--epsilon", search.epsilon, "Tolerated chance of missing a topic");
  plan->add_option("--trials", search.trials, "Monte Carlo trials per evaluation");
  plan->add_option("--seed", search.seed, "Monte Carlo seed");
  plan->add_option("--search-max", search.search_max, "Largest sample size considered");
  plan->add_option("--sample-size", plan_fixed, "Evaluate this size instead of searching");
  plan->add_option("--out", plan_out, "Also write the plan here");

  // sample
  auto* samp = app.add_subcommand("sample", "Draw a uniform generation sample");
  std::string samp_corpus, samp_out, samp_rest;
  std::size_t samp_size = 0;
  std::optional<std::uint64_t> samp_seed;
  samp->add_option("--corpus", samp_corpus)->required()->check(CLI::ExistingFile);
  samp->add_option("--size", samp_size)->required();
  samp->add_option("--seed", samp_seed, "Default: generation.sample_seed");
  samp->add_option("--out", samp_out)->required();
  samp->add_option("--remainder", samp_rest, "Write the undrawn documents here");

  // generate
  auto* gen = app.add_subcommand("generate", "Generate top-level topics");
  std::string gen_corpus, gen_out, gen_seeds, gen_trace;
  std::optional<std::size_t> gen_drought;
  gen->add_option("--corpus", gen_corpus, "Sample to generate from")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Topic file")->required();
  gen->add_option("--seeds", gen_seeds, "Seed topic file (default: generation.seed_topics)")
      ->check(CLI::ExistingFile);
  gen->add_option("--trace", gen_trace, "Trace file (default: <out>.trace.jsonl)");
  gen->add_option("--drought", gen_drought, "Stop after this many documents without a new topic");

  // refine
  auto* ref = app.add_subcommand("refine", "Merge near-duplicate topics and prune rare ones");
  std::string ref_topics, ref_out, ref_relabel;
  std::optional<std::size_t> ref_prune;
  ref->add_option("--topics", ref_topics)->required()->check(CLI::ExistingFile);
  ref->add_option("--out", ref_out)->required();
  ref->add_option("--relabel", ref_relabel, "Relabel map (default: <out>.relabel.tsv)");
  ref->add_option("--prune-threshold", ref_prune, "Override refinement.prune_threshold");

  // assign
  auto* asg = app.add_subcommand("assign", "Assign topics to documents");
  std::string asg_corpus, asg_topics, asg_out, asg_mode;
  asg->add_option("--corpus", asg_corpus)->required()->check(CLI::ExistingFile);
  asg->add_option("--topics", asg_topics)->required()->check(CLI::ExistingFile);
  asg->add_option("--out", asg_out)->required();
  asg->add_option("--mode", asg_mode, "single or multi")->check(CLI::IsMember({"single", "multi"}));

  // hierarchy
  auto* hier = app.add_subcommand("hierarchy", "Generate grounded subtopics per top-level topic");
  std::string hier_corpus, hier_topics, hier_asg, hier_out, hier_seeds;
  hier->add_option("--corpus", hier_corpus)->required()->check(CLI::ExistingFile);
  hier->add_option("--topics", hier_topics)->required()->check(CLI::ExistingFile);
  hier->add_option("--assignments", hier_asg)->required()->check(CLI::ExistingFile);
  hier->add_option("--out", hier_out)->required();
  hier->add_option("--seed-subtopics", hier_seeds, "Topic file: [1] parents followed by [2] seeds")
      ->check(CLI::ExistingFile);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score assignments against ground-truth labels");
  std::string eval_asg, eval_labels, eval_out;
  bool eval_allow_missing = false;
  eval->add_option("--assignments", eval_asg)->required()->check(CLI::ExistingFile);
  eval->add_option("--labels", eval_labels, "JSONL with id and label, or id<TAB>label lines")
      ->required()->check(CLI::ExistingFile);
  eval->add_flag("--allow-missing", eval_allow_missing, "Score only ids present in both files");
  eval->add_option("--out", eval_out);

  // stability
  auto* stab = app.add_subcommand("stability", "Alignment between two assignment runs");
  std::string stab_a, stab_b, stab_out;
  bool stab_allow_missing = false;
  stab->add_option("--a", stab_a)->required()->check(CLI::ExistingFile);
  stab->add_option("--b", stab_b)->required()->check(CLI::ExistingFile);
  stab->add_flag("--allow-missing", stab_allow_missing, "Score only ids present in both runs");
  stab->add_option("--out", stab_out);

  // cost
  auto* cost = app.add_subcommand("cost", "Sum per-stage usage over run manifests");
  std::vector<std::string> cost_manifests;
  cost->add_option("manifests", cost_manifests)->required()->check(CLI::ExistingFile);

  std::vector<const char*> argv{"topicllm"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kUsage);
  }

  auto previous = spdlog::default_logger();
  auto logger = std::make_shared<spdlog::logger>(
      "topicllm", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(log_level));
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  try {
    PipelineConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    if (!provider_kind.empty()) config.provider.kind = provider_kind;
    if (!fixture.empty()) config.provider.fixture = fixture;
    if (!record.empty()) config.provider.record = record;
    validate(config);
    Session session(config, backend);
    const auto& cfg = session.config();

    if (plan->parsed()) {
      std::uint64_t n = plan_size;
      if (!plan_corpus.empty()) n = load_corpus(plan_corpus).size();
      if (n == 0) throw ConfigError("plan-sample needs --corpus or --corpus-size");
      const auto p = plan_fixed ? evaluate_sample_size(n, plan_min_docs, plan_fixed, search)
                                : recommend_sample_size(n, plan_min_docs, search);
      const json j = plan_json(p);
      out << j.dump(2) << '\n';
      if (!plan_out.empty()) {
        write_json(j, plan_out);
        std::vector<fs::path> inputs;
        if (!plan_corpus.empty()) inputs.push_back(plan_corpus);
        session.write_manifest(manifest_for(manifest_path, plan_out), "plan-sample",
                               inputs, {plan_out}, {{"monte_carlo", search.seed}});
      }
      return 0;
    }

    if (samp->parsed()) {
      const std::uint64_t seed = samp_seed.value_or(cfg.generation.sample_seed);
      const auto split = sample(load_corpus(samp_corpus), samp_size, seed);
      write_corpus(split.sample, fs::path(samp_out));
      std::vector<fs::path> outputs{samp_out};
      if (!samp_rest.empty()) {
        write_corpus(split.remainder, fs::path(samp_rest));
        outputs.push_back(samp_rest);
      }
      session.write_manifest(manifest_for(manifest_path, samp_out), "sample",
                             {samp_corpus}, outputs, {{"sample", seed}});
      spdlog::info("sampled {} of {} documents", split.sample.size(),
                   split.sample.size() + split.remainder.size());
      return 0;
    }

    if (gen->parsed()) {
      const Corpus docs = load_corpus(gen_corpus);
      std::vector<fs::path> inputs{gen_corpus};
      const std::string seeds_path = gen_seeds.empty() ? cfg.generation.seed_topics : gen_seeds;
      TopicList seeds = default_seed_topics();
      if (!seeds_path.empty()) {
        seeds = read_topic_file(seeds_path, true);
        inputs.push_back(seeds_path);
      }
      GenerationConfig g;
      g.model = cfg.model("generation");
      g.prompt = load_prompt(cfg.generation.prompt, prompts::generation(),
                             {prompts::kTopics, prompts::kDocument});
      g.max_doc_tokens = budget(cfg.generation.max_doc_tokens);
      g.estimator = session.estimator();
      g.drought_threshold = gen_drought ? gen_drought : cfg.generation.drought_threshold;
      const auto result = generation_pass(docs, seeds, session.provider(), g);

      const fs::path trace = gen_trace.empty() ? gen_out + ".trace.jsonl" : gen_trace;
      write_topic_file(result.topics, fs::path(gen_out));
      write_trace(result.trace, trace);
      session.write_manifest(manifest_for(manifest_path, gen_out), "generate", inputs,
                             {gen_out, trace}, json::object());
      spdlog::info("{} topics after {} documents{}", result.topics.size(),
                   result.trace.records.size(),
                   result.stopped_early ? " (stopped by drought rule)" : "");
      if (result.aborted) {
        err << "error: generation aborted: " << *result.aborted << '\n';
        return static_cast<int>(ErrorCategory::kProvider);
      }
      return 0;
    }

    if (ref->parsed()) {
      const TopicList topics = read_topic_file(ref_topics);
      RefinementConfig rc;
      rc.embedding_model = cfg.model("embedding");
      rc.similarity_threshold = cfg.refinement.similarity_threshold;
      rc.merge.model = cfg.model("refinement");
      rc.merge.prompt = load_prompt(cfg.refinement.prompt, prompts::refinement(),
                                    {prompts::kTopics});
      rc.merge.batch_size = cfg.refinement.merge_batch;
      rc.prune_threshold = ref_prune.value_or(cfg.refinement.prune_threshold);
      rc.iterations = cfg.refinement.iterations;
      const auto result = refine(topics, session.provider(), rc);

      const fs::path relabel = ref_relabel.empty() ? ref_out + ".relabel.tsv" : ref_relabel;
      write_topic_file(result.topics, fs::path(ref_out));
      write_relabel_map(result.relabel, relabel);
      session.write_manifest(manifest_for(manifest_path, ref_out), "refine", {ref_topics},
                             {ref_out, relabel}, json::object());
      spdlog::info("{} topics -> {} ({} merges, {} rejected directives)", topics.size(),
                   result.topics.size(), result.directives.size(), result.rejected.size());
      return 0;
    }

    if (asg->parsed()) {
      const Corpus docs = load_corpus(asg_corpus);
      const TopicList topics = read_topic_file(asg_topics);
      AssignmentConfig ac;
      ac.model = cfg.model("assignment");
      ac.prompt = load_prompt(cfg.assignment.prompt, prompts::assignment(),
                              {prompts::kTree, prompts::kDocument});
      ac.mode = cfg.assignment.mode;
      if (asg_mode == "single") ac.mode = AssignmentMode::kSingle;
      if (asg_mode == "multi") ac.mode = AssignmentMode::kMulti;
      ac.retry_limit = cfg.assignment.retry_limit;
      ac.seed = cfg.assignment.seed;
      ac.max_doc_tokens = budget(cfg.assignment.max_doc_tokens);
      ac.estimator = session.estimator();
      const auto result = assign_corpus(docs, topics, session.provider(), ac);

      write_assignments(result, fs::path(asg_out));
      session.write_manifest(manifest_for(manifest_path, asg_out), "assign",
                             {asg_corpus, asg_topics}, {asg_out},
                             {{"shuffle", ac.seed}});
      spdlog::info("assigned {} of {} documents", result.report.assigned, docs.size());
      for (const auto& id : result.report.failed_ids) {
        spdlog::warn("document {} exhausted its retries", id);
      }
      return 0;
    }

    if (hier->parsed()) {
      const Corpus docs = load_corpus(hier_corpus);
      const TopicList topics = read_topic_file(hier_topics);
      const auto assignments = read_assignments(hier_asg);
      std::vector<fs::path> inputs{hier_corpus, hier_topics, hier_asg};
      std::map<std::string, std::vector<Topic>> seeds;
      if (!hier_seeds.empty()) {
        seeds = read_seed_subtopics(hier_seeds);
        inputs.push_back(hier_seeds);
      }
      HierarchyConfig hc;
      hc.model = cfg.model("hierarchy");
      hc.prompt = load_prompt(cfg.hierarchy.prompt, prompts::subtopics(),
                              {prompts::kBranch, prompts::kDocuments});
      hc.chunk_budget = cfg.hierarchy.chunk_budget;
      hc.max_doc_tokens = budget(cfg.hierarchy.max_doc_tokens);
      hc.estimator = session.estimator();
      if (cfg.hierarchy.refine) {
        RefinementConfig rc;
        rc.embedding_model = cfg.model("embedding");
        rc.similarity_threshold = cfg.refinement.similarity_threshold;
        rc.merge.model = cfg.model("refinement");
        rc.merge.batch_size = cfg.refinement.merge_batch;
        rc.prune_threshold = cfg.hierarchy.prune_threshold;
        rc.iterations = cfg.refinement.iterations;
        hc.refinement = rc;
      }
      const auto result = build_hierarchy(topics, assignments, docs, session.provider(), hc, seeds);
      write_hierarchy(result.branches, fs::path(hier_out));
      session.write_manifest(manifest_for(manifest_path, hier_out), "hierarchy", inputs,
                             {hier_out}, json::object());
      spdlog::info("{} branches, {} subtopics dropped", result.branches.size(),
                   result.rejected.size());
      return 0;
    }

    if (eval->parsed() || stab->parsed()) {
      const bool is_eval = eval->parsed();
      auto pred = metrics::clustering_from_assignments(read_assignments(is_eval ? eval_asg : stab_a));
      auto truth = is_eval ? metrics::read_labels(eval_labels)
                           : metrics::clustering_from_assignments(read_assignments(stab_b));
      std::size_t dropped = 0;
      if (is_eval ? eval_allow_missing : stab_allow_missing) {
        dropped = metrics::restrict_to_common(pred, truth);
        if (dropped) spdlog::warn("{} ids present in only one input were skipped", dropped);
      }
      json j = report_json(metrics::alignment_report(pred, truth));
      j["dropped"] = dropped;
      out << j.dump(2) << '\n';
      const std::string& dest = is_eval ? eval_out : stab_out;
      if (!dest.empty()) {
        write_json(j, dest);
        std::vector<fs::path> inputs = is_eval
                                           ? std::vector<fs::path>{eval_asg, eval_labels}
                                           : std::vector<fs::path>{stab_a, stab_b};
        session.write_manifest(manifest_for(manifest_path, dest),
                               is_eval ? "evaluate" : "stability", inputs, {dest},
                               json::object());
      }
      return 0;
    }

    if (cost->parsed()) {
      std::map<std::string, llm::UsageRecord> stages;
      llm::UsageRecord total;
      for (const auto& path : cost_manifests) {
        std::ifstream in(path);
        json m;
        try {
          m = json::parse(in);
        } catch (const json::exception& e) {
          throw DataError(path + ": " + e.what());
        }
        if (!m.contains("usage") || !m["usage"].is_object()) {
          throw DataError(path + ": not a run manifest");
        }
        for (const auto& [stage, u] : m["usage"].items()) {
          const auto rec = usage_from_json(u);
          stages[stage] += rec;
          total += rec;
        }
      }
      json j = {{"stages", json::object()}, {"total", usage_json(total)}};
      for (const auto& [stage, u] : stages) j["stages"][stage] = usage_json(u);
      out << j.dump(2) << '\n';
      return 0;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::kUsage);
  } catch (const llm::ProviderError& e) {
    err << "provider error (" << llm::to_string(e.kind()) << "): " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::kProvider);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorCategory::kData);
  }
  return static_cast<int>(ErrorCategory::kUsage);
}

}  // namespace topicllm::cli
