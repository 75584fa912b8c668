// Copyright 2026 The review-perturb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rp/config.hpp"
#include "rp/corpus.hpp"
#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/pipeline.hpp"
#include "rp/report.hpp"
#include "rp/rng.hpp"
#include "rp/taxonomy.hpp"
#include "rp/text.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitPipeline = 1;
constexpr int kExitUsage = 2;

/// A bad flag value; reported with the flag name and exit code 2.
struct UsageError {
  std::string flag;
  std::string message;
};

struct Flags {
  std::string corpus;
  std::string out;
  std::vector<std::string> aspects;
  std::vector<std::string> cots;
  std::string provider;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> alpha;
  std::optional<double> margin_dim;
  std::optional<double> margin_overall;
  std::optional<double> margin_decision;
  std::string decision_mapping;
  std::string resume;
  std::string run_id;
  std::string config_file;
  std::string mock_script;
  std::string cache_dir;
  std::optional<std::size_t> per_aspect;
  std::optional<std::size_t> claims;
  // sample
  std::string pool;
  std::string targets;
};

void add_pipeline_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--corpus", f.corpus, "corpus.json index of the baseline bundles");
  cmd->add_option("--out", f.out, "Output root; runs go to <out>/<run_id>");
  cmd->add_option("--aspect", f.aspects, "mode.aspect to perturb (repeatable)");
  cmd->add_option("--cot", f.cots, "none|dimension|template (repeatable)");
  cmd->add_option("--provider", f.provider, "mock|openai-compatible|gemini");
  cmd->add_option("--model", f.model, "Model id for every role");
  cmd->add_option("--seed", f.seed, "Run seed");
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--margin-dim", f.margin_dim, "Equivalence margin for dimension scores");
  cmd->add_option("--margin-overall", f.margin_overall, "Equivalence margin for overall scores");
  cmd->add_option("--margin-decision", f.margin_decision,
                  "Equivalence margin for mapped decisions");
  cmd->add_option("--decision-mapping", f.decision_mapping, "simple|proportional");
  cmd->add_option("--resume", f.resume, "Existing run id to continue");
  cmd->add_option("--run-id", f.run_id, "Id for a new run");
  cmd->add_option("--config", f.config_file, "Key/value configuration file");
  cmd->add_option("--mock-script", f.mock_script, "Scripted responses for the mock provider");
  cmd->add_option("--cache-dir", f.cache_dir, "Response cache directory");
}

template <typename F>
auto flag_value(const std::string& flag, F&& parse) {
  try {
    return parse();
  } catch (const rp::Error& e) {
    throw UsageError{flag, e.what()};
  }
}

/// A resumed run keeps its corpus, aspects, variants and seed unless they
/// are given again.
void inherit_run(rp::config::PipelineConfig& c, const Flags& f) {
  const fs::path manifest = c.run_dir() / "run_manifest.json";
  if (!fs::exists(manifest)) return;
  const auto j = rp::io::read_json(manifest);
  const auto& stored = j.at("config");
  if (f.corpus.empty()) c.corpus = j.at("paths").at("corpus").get<std::string>();
  if (f.config_file.empty()) {
    if (f.aspects.empty()) {
      c.aspects.clear();
      for (const auto& a : stored.at("aspects")) c.aspects.push_back(rp::parse_aspect(a.get<std::string>()));
    }
    if (f.cots.empty()) {
      c.variants.clear();
      for (const auto& v : stored.at("variants")) {
        c.variants.push_back(rp::roles::parse_variant(v.get<std::string>()));
      }
    }
    if (!f.seed) c.seed = stored.at("seed").get<std::uint64_t>();
  }
}

rp::config::PipelineConfig resolve(const Flags& f, bool needs_existing_run) {
  rp::config::PipelineConfig c;
  rp::config::apply_environment(c);
  if (!f.config_file.empty()) {
    flag_value("--config", [&] {
      rp::config::apply_document(c, rp::config::parse_document(rp::io::read_file(f.config_file)));
      return 0;
    });
  }
  if (!f.corpus.empty()) c.corpus = f.corpus;
  if (!f.out.empty()) c.out = f.out;
  if (!f.aspects.empty()) {
    c.aspects.clear();
    for (const auto& a : f.aspects) {
      c.aspects.push_back(flag_value("--aspect", [&] { return rp::parse_aspect(a); }));
    }
  }
  if (!f.cots.empty()) {
    c.variants.clear();
    for (const auto& v : f.cots) {
      c.variants.push_back(flag_value("--cot", [&] { return rp::roles::parse_variant(v); }));
    }
  }
  if (!f.provider.empty()) c.provider = f.provider;
  if (!f.model.empty()) c.reviewer_model = c.meta_model = c.perturb_model = f.model;
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.margin_dim) c.margin_dim = *f.margin_dim;
  if (f.margin_overall) c.margin_overall = *f.margin_overall;
  if (f.margin_decision) c.margin_decision = *f.margin_decision;
  if (!f.decision_mapping.empty()) {
    c.decision_mapping =
        flag_value("--decision-mapping", [&] { return rp::stats::parse_mapping(f.decision_mapping); });
  }
  if (!f.mock_script.empty()) c.mock_script = fs::path(f.mock_script);
  if (!f.cache_dir.empty()) c.cache_dir = fs::path(f.cache_dir);
  if (f.per_aspect) c.eval_per_aspect = *f.per_aspect;
  if (f.claims) c.eval_claims = *f.claims;

  if (!f.resume.empty() && !f.run_id.empty()) {
    throw UsageError{"--run-id", "cannot be combined with --resume"};
  }
  if (!f.resume.empty()) {
    c.run_id = f.resume;
    c.resume = true;
    if (!fs::exists(c.run_dir())) {
      throw UsageError{"--resume", "no run directory " + c.run_dir().string()};
    }
    inherit_run(c, f);
  } else if (needs_existing_run) {
    throw UsageError{"--resume", "this stage needs the id of an existing run"};
  } else {
    if (!f.run_id.empty()) c.run_id = f.run_id;
    if (c.run_id.empty()) c.run_id = rp::config::new_run_id();
    if (fs::exists(c.run_dir() / "run_manifest.json")) {
      throw UsageError{"--run-id", "run '" + c.run_id + "' already exists; pass --resume"};
    }
  }
  if (c.corpus.empty()) throw UsageError{"--corpus", "a corpus index is required"};
  return c;
}

int cmd_sample(const Flags& f) {
  if (f.pool.empty()) throw UsageError{"--pool", "a pool index is required"};
  if (f.out.empty()) throw UsageError{"--out", "an output directory is required"};
  const auto parts = rp::text::split(f.targets, ',');
  if (parts.size() != 3) throw UsageError{"--targets", "expected poster,spotlight,oral counts"};
  rp::corpus::CategoryCounts targets;
  try {
    targets.poster = std::stoul(parts[0]);
    targets.spotlight = std::stoul(parts[1]);
    targets.oral = std::stoul(parts[2]);
  } catch (const std::exception&) {
    throw UsageError{"--targets", "counts must be non-negative integers"};
  }
  const std::uint64_t seed = f.seed.value_or(0);
  const auto index = rp::corpus::load_corpus_index(f.pool);
  std::vector<rp::corpus::PoolEntry> pool;
  for (const auto& e : index.entries) pool.emplace_back(e.paper_id, e.category);
  const auto ids = rp::corpus::stratified_sample(pool, targets, seed);

  std::map<std::string, const rp::corpus::CorpusEntry*> by_id;
  for (const auto& e : index.entries) by_id[e.paper_id] = &e;
  ordered_json sample;
  sample["schema_version"] = 1;
  sample["pool"] = fs::absolute(f.pool).lexically_normal().generic_string();
  sample["seed"] = seed;
  sample["rng"] = std::string(rp::kRngAlgorithm);
  sample["targets"] = {{"poster", targets.poster},
                       {"spotlight", targets.spotlight},
                       {"oral", targets.oral}};
  sample["paper_ids"] = ids;
  ordered_json corpus;
  corpus["schema_version"] = 1;
  ordered_json bundles = ordered_json::array();
  for (const auto& id : ids) {
    const auto* e = by_id.at(id);
    bundles.push_back({{"paper_id", id},
                       {"decision_category", std::string(rp::corpus::to_string(e->category))},
                       {"dir", fs::absolute(e->dir).lexically_normal().generic_string()}});
  }
  corpus["bundles"] = bundles;
  const fs::path out(f.out);
  rp::io::write_file_atomic(out / "sample.json", rp::io::dump_json(sample));
  rp::io::write_file_atomic(out / "corpus.json", rp::io::dump_json(corpus));
  std::cout << ids.size() << " papers sampled into " << (out / "sample.json").string() << "\n";
  return kExitOk;
}

int cmd_classify(const Flags& f) {
  if (f.corpus.empty()) throw UsageError{"--corpus", "a corpus index is required"};
  if (f.out.empty()) throw UsageError{"--out", "an output directory is required"};
  const auto rules = rp::taxonomy::default_rules();
  const auto bundles = rp::corpus::load_corpus(rp::corpus::load_corpus_index(f.corpus));
  ordered_json papers = ordered_json::array();
  for (const auto& b : bundles) {
    const auto cls = rp::taxonomy::classify_paper(b.paper, rules);
    ordered_json sections = ordered_json::array();
    for (std::size_t i = 0; i < b.paper.sections.size(); ++i) {
      sections.push_back({{"index", i},
                          {"title", b.paper.sections[i].title},
                          {"level", b.paper.sections[i].level},
                          {"contribution", cls.relevance[i].contribution},
                          {"soundness", cls.relevance[i].soundness}});
    }
    papers.push_back(
        {{"paper_id", b.id()}, {"sections", sections}, {"unmatched_titles", cls.unmatched_titles}});
  }
  ordered_json j;
  j["schema_version"] = 1;
  j["corpus"] = fs::absolute(f.corpus).lexically_normal().generic_string();
  j["rules"] = (rp::io::resource_dir() / "data" / "taxonomy_rules.json").generic_string();
  j["papers"] = papers;
  rp::io::write_file_atomic(fs::path(f.out) / "sections.json", rp::io::dump_json(j));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Aspect-guided perturbation analysis of LLM reviewers and meta-reviewers"};
  app.require_subcommand(1);
  Flags f;

  auto* sample = app.add_subcommand("sample", "Stratified sample of a corpus pool");
  sample->add_option("--pool", f.pool, "corpus.json of the candidate pool");
  sample->add_option("--targets", f.targets, "poster,spotlight,oral counts")->required();
  sample->add_option("--seed", f.seed, "Sampling seed");
  sample->add_option("--out", f.out, "Directory for sample.json and corpus.json");

  auto* classify = app.add_subcommand("classify-sections", "Section relevance per paper");
  classify->add_option("--corpus", f.corpus, "corpus.json index");
  classify->add_option("--out", f.out, "Directory for sections.json");

  struct Stage {
    const char* name;
    const char* help;
    bool needs_existing_run;
  };
  const Stage stages[] = {
      {"perturb", "Perturb every bundle for each aspect", false},
      {"review", "Reviewer on baseline and paper perturbations", true},
      {"metareview", "Meta-reviewer on baseline and every perturbation", true},
      {"analyze", "Paired tests for every aspect and variant", true},
      {"report", "Tables, figures and summary from the analysis", true},
      {"eval-manifest", "Sample perturbations for manual checking", true},
      {"perturb-stats", "Edit counts per aspect", true},
      {"run", "Every stage in order", false},
  };
  std::vector<std::pair<CLI::App*, Stage>> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_pipeline_flags(cmd, f);
    if (std::string(s.name) == "eval-manifest") {
      cmd->add_option("--per-aspect", f.per_aspect, "Edits sampled per aspect");
      cmd->add_option("--claims", f.claims, "False claims sampled");
    }
    stage_cmds.emplace_back(cmd, s);
  }

  if (argc > 1 && argv[1][0] != '-' && app.get_subcommand_no_throw(argv[1]) == nullptr) {
    std::cerr << "error: unknown subcommand '" << argv[1] << "'\n";
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (sample->parsed()) return cmd_sample(f);
    if (classify->parsed()) return cmd_classify(f);
    for (const auto& [cmd, s] : stage_cmds) {
      if (!cmd->parsed()) continue;
      const std::string name = s.name;
      rp::pipeline::Runner runner(resolve(f, s.needs_existing_run));
      if (name == "perturb") runner.perturb();
      else if (name == "review") runner.review();
      else if (name == "metareview") runner.metareview();
      else if (name == "analyze") runner.analyze();
      else if (name == "eval-manifest") runner.eval_manifest();
      else if (name == "perturb-stats") runner.perturb_stats();
      else if (name == "report") {
        rp::report::build_report(runner.run_dir(), runner.run_dir() / "report",
                                 runner.config().aspects, runner.config().variants);
      } else if (name == "run") {
        runner.run_all();
      }
      if (name != "report" && name != "run") runner.write_manifest(name);
      std::cout << runner.run_dir().string() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.flag << ": " << e.message << "\n";
    return kExitUsage;
  } catch (const rp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == rp::ErrorCode::kConfigError ? kExitUsage : kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return kExitUsage;
}
