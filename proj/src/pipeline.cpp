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

#include "rp/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <map>
#include <set>
#include <thread>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/perturb.hpp"
#include "rp/report.hpp"
#include "rp/rng.hpp"
#include "rp/stats.hpp"
#include "rp/text.hpp"

namespace rp::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

fs::path role_output_path(const fs::path& run_dir, const std::string& arm,
                          const std::string& bundle_id,
                          std::optional<roles::CotVariant> variant) {
  const std::string suffix =
      variant ? ".meta." + std::string(roles::to_string(*variant)) + ".json" : ".reviewer.json";
  return run_dir / arm / (bundle_id + suffix);
}

fs::path perturbed_bundle_dir(const fs::path& run_dir, const PerturbationAspect& aspect,
                              const std::string& bundle_id) {
  return run_dir / aspect.name() / "bundles" / bundle_id;
}

fs::path perturbation_log_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                               const std::string& bundle_id) {
  return run_dir / aspect.name() / "logs" / (bundle_id + ".json");
}

fs::path bucket_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                     const std::string& bundle_id) {
  return run_dir / aspect.name() / "false_claim_buckets" / (bundle_id + ".json");
}

fs::path exclusions_path(const fs::path& run_dir, const std::string& arm,
                         const std::string& stage) {
  return run_dir / arm / ("excluded." + stage + ".json");
}

fs::path analysis_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                       const std::string& variant) {
  return run_dir / "analysis" / (aspect.name() + "." + variant + ".json");
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(jobs, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

std::shared_ptr<llm::Provider> provider_for(const config::PipelineConfig& c) {
  llm::HttpSettings http;
  http.base_url = c.base_url;
  http.api_key = c.api_key;
  return llm::make_provider(c.provider, http, c.mock_script);
}

llm::Policy policy_for(const config::PipelineConfig& c) {
  llm::Policy p;
  p.max_retries = c.max_retries;
  p.base_delay = std::chrono::milliseconds(c.base_delay_ms);
  p.max_delay = std::chrono::milliseconds(c.max_delay_ms);
  p.requests_per_minute = c.requests_per_minute;
  p.max_in_flight = c.max_in_flight;
  return p;
}

bool excludable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kAllEditsFailed:
    case ErrorCode::kNoTargets:
    case ErrorCode::kBucketParseError:
    case ErrorCode::kBucketTooSmall:
    case ErrorCode::kParseError:
    case ErrorCode::kTruncation:
    case ErrorCode::kInvalidDocument:
      return true;
    default:
      return false;
  }
}

void write_exclusions(const fs::path& path, const std::string& arm, const std::string& stage,
                      const std::vector<Exclusion>& excluded) {
  ordered_json j;
  j["arm"] = arm;
  j["stage"] = stage;
  ordered_json list = ordered_json::array();
  for (const auto& e : excluded) list.push_back({{"bundle_id", e.bundle_id}, {"reason", e.reason}});
  j["excluded"] = list;
  io::write_file_atomic(path, io::dump_json(j));
}

std::size_t count_exclusions(const fs::path& path) {
  if (!fs::exists(path)) return 0;
  return io::read_json(path).at("excluded").size();
}

std::vector<std::string> arms_of(const config::PipelineConfig& c) {
  std::vector<std::string> arms{kBaselineArm};
  for (const auto& a : c.aspects) arms.push_back(a.name());
  return arms;
}

}  // namespace

Runner::Runner(config::PipelineConfig config)
    : Runner(config, provider_for(config)) {}

Runner::Runner(config::PipelineConfig config, std::shared_ptr<llm::Provider> provider)
    : config_(std::move(config)) {
  if (config_.run_id.empty()) config_.run_id = config::new_run_id();
  gateway_ = std::make_shared<llm::Gateway>(std::move(provider), config_.resolved_cache_dir(),
                                            policy_for(config_));
  started_at_ = utc_now();
}

const corpus::CorpusIndex& Runner::index() {
  if (!index_) {
    if (config_.corpus.empty()) throw Error(ErrorCode::kConfigError, "no corpus configured");
    index_ = corpus::load_corpus_index(config_.corpus);
  }
  return *index_;
}

const std::vector<corpus::Bundle>& Runner::baseline() {
  if (!baseline_) baseline_ = corpus::load_corpus(index());
  return *baseline_;
}

roles::RoleConfig Runner::reviewer_config() const {
  roles::RoleConfig rc;
  rc.model_id = config_.reviewer_model;
  rc.temperature = config_.role_temperature;
  rc.max_output_tokens = config_.max_output_tokens;
  rc.max_prompt_chars = config_.max_prompt_chars;
  return rc;
}

roles::RoleConfig Runner::meta_config() const {
  roles::RoleConfig rc = reviewer_config();
  rc.model_id = config_.meta_model;
  return rc;
}

// Perturbation ----------------------------------------------------------------

void Runner::perturb() {
  const auto& bundles = baseline();
  auto pcfg = perturb::default_config();
  pcfg.model_id = config_.perturb_model;
  pcfg.temperature = config_.perturb_temperature;
  pcfg.max_output_tokens = config_.max_output_tokens;
  pcfg.seed = config_.seed;

  const fs::path run = run_dir();
  for (const auto& aspect : config_.aspects) {
    std::vector<std::optional<Exclusion>> excluded(bundles.size());
    parallel_for(bundles.size(), config_.jobs, [&](std::size_t i) {
      const auto& b = bundles[i];
      const fs::path dir = perturbed_bundle_dir(run, aspect, b.id());
      fs::remove_all(dir);
      fs::remove(perturbation_log_path(run, aspect, b.id()));
      fs::remove(bucket_path(run, aspect, b.id()));
      try {
        auto result = perturb::perturb_bundle(b, aspect, *gateway_, pcfg);
        corpus::validate(result.bundle);
        corpus::write_bundle(result.bundle, dir);
        io::write_file_atomic(perturbation_log_path(run, aspect, b.id()),
                              io::dump_json(perturb::to_json(result.log)));
        if (result.bucket) {
          io::write_file_atomic(bucket_path(run, aspect, b.id()),
                                io::dump_json(perturb::to_json(*result.bucket)));
        }
      } catch (const Error& e) {
        if (!excludable(e.code())) throw;
        excluded[i] = Exclusion{b.id(), e.what()};
      }
    });
    std::vector<Exclusion> list;
    for (auto& e : excluded) {
      if (e) list.push_back(*e);
    }
    write_exclusions(exclusions_path(run, aspect.name(), "perturb"), aspect.name(), "perturb",
                     list);
  }
}

namespace {

/// Baseline bundles for the baseline arm, stored perturbed copies otherwise.
std::vector<std::optional<corpus::Bundle>> arm_bundles(const fs::path& run,
                                                       const std::string& arm,
                                                       const corpus::CorpusIndex& index,
                                                       const std::vector<corpus::Bundle>& base) {
  std::vector<std::optional<corpus::Bundle>> out;
  if (arm == kBaselineArm) {
    for (const auto& b : base) out.emplace_back(b);
    return out;
  }
  const auto aspect = parse_aspect(arm);
  for (const auto& e : index.entries) {
    const fs::path dir = perturbed_bundle_dir(run, aspect, e.paper_id);
    if (fs::exists(dir)) {
      out.emplace_back(corpus::load_bundle(dir, e.category));
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

struct RoleTask {
  std::string arm;
  std::optional<roles::CotVariant> variant;
  std::size_t arm_index = 0;  // position in the arm's bundle list
  const corpus::Bundle* bundle = nullptr;
};

}  // namespace

void Runner::review() {
  const fs::path run = run_dir();
  std::vector<std::string> arms{kBaselineArm};
  for (const auto& a : config_.aspects) {
    if (a.mode == Mode::kPaper) arms.push_back(a.name());
  }
  std::map<std::string, std::vector<std::optional<corpus::Bundle>>> loaded;
  std::vector<RoleTask> tasks;
  for (const auto& arm : arms) {
    loaded[arm] = arm_bundles(run, arm, index(), baseline());
  }
  for (const auto& arm : arms) {
    const auto& list = loaded[arm];
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (list[i]) tasks.push_back({arm, std::nullopt, i, &*list[i]});
    }
  }

  const auto rc = reviewer_config();
  std::vector<std::optional<Exclusion>> excluded(tasks.size());
  parallel_for(tasks.size(), config_.jobs, [&](std::size_t i) {
    const auto& t = tasks[i];
    const fs::path path = role_output_path(run, t.arm, t.bundle->id(), std::nullopt);
    fs::remove(path);
    try {
      const auto out = roles::run_reviewer(t.bundle->paper, *gateway_, rc,
                                           "review/" + t.arm + "/" + t.bundle->id());
      io::write_file_atomic(path, io::dump_json(roles::to_json(out)));
    } catch (const Error& e) {
      if (!excludable(e.code())) throw;
      excluded[i] = Exclusion{t.bundle->id(), e.what()};
    }
  });
  for (const auto& arm : arms) {
    std::vector<Exclusion> list;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].arm == arm && excluded[i]) list.push_back(*excluded[i]);
    }
    write_exclusions(exclusions_path(run, arm, "reviewer"), arm, "reviewer", list);
  }
}

void Runner::metareview() {
  const fs::path run = run_dir();
  const auto arms = arms_of(config_);
  std::map<std::string, std::vector<std::optional<corpus::Bundle>>> loaded;
  for (const auto& arm : arms) loaded[arm] = arm_bundles(run, arm, index(), baseline());

  std::vector<RoleTask> tasks;
  for (const auto& arm : arms) {
    for (auto v : config_.variants) {
      const auto& list = loaded[arm];
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i]) tasks.push_back({arm, v, i, &*list[i]});
      }
    }
  }

  const auto rc = meta_config();
  std::vector<std::optional<Exclusion>> excluded(tasks.size());
  parallel_for(tasks.size(), config_.jobs, [&](std::size_t i) {
    const auto& t = tasks[i];
    const fs::path path = role_output_path(run, t.arm, t.bundle->id(), t.variant);
    fs::remove(path);
    const std::string tag = "meta/" + std::string(roles::to_string(*t.variant)) + "/" + t.arm +
                            "/" + t.bundle->id();
    try {
      const auto out = roles::run_meta_reviewer(*t.bundle, *t.variant, *gateway_, rc, tag);
      io::write_file_atomic(path, io::dump_json(roles::to_json(out)));
    } catch (const Error& e) {
      if (!excludable(e.code())) throw;
      excluded[i] = Exclusion{t.bundle->id(), e.what()};
    }
  });
  for (const auto& arm : arms) {
    for (auto v : config_.variants) {
      std::vector<Exclusion> list;
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (tasks[i].arm == arm && tasks[i].variant == v && excluded[i]) {
          list.push_back(*excluded[i]);
        }
      }
      const std::string stage = "meta." + std::string(roles::to_string(v));
      write_exclusions(exclusions_path(run, arm, stage), arm, stage, list);
    }
  }
}

// Analysis --------------------------------------------------------------------

namespace {

template <typename T, typename Load>
std::map<std::string, T> load_outputs(const fs::path& run, const std::string& arm,
                                      const corpus::CorpusIndex& index,
                                      std::optional<roles::CotVariant> variant, Load load) {
  std::map<std::string, T> out;
  for (const auto& e : index.entries) {
    const fs::path p = role_output_path(run, arm, e.paper_id, variant);
    if (fs::exists(p)) out.emplace(e.paper_id, load(io::read_json(p)));
  }
  return out;
}

template <typename T, typename Get>
std::map<std::string, double> metric_map(const std::map<std::string, T>& outputs, Get get) {
  std::map<std::string, double> m;
  for (const auto& [id, o] : outputs) m[id] = get(o);
  return m;
}

struct MetricSpec {
  std::string name;
  double margin = 0.0;
  std::map<std::string, double> baseline;
  std::map<std::string, double> perturbed;
};

ordered_json analyze_metric(const MetricSpec& spec, const config::PipelineConfig& c) {
  ordered_json j;
  j["metric"] = spec.name;
  j["margin"] = spec.margin;
  try {
    const auto samples = stats::pair_runs(spec.baseline, spec.perturbed, spec.name);
    const auto verdict = stats::classify_outcome(samples, spec.margin, c.alpha, c.exact_threshold);
    j["n"] = samples.pairs.size();
    j["mean_delta"] = stats::mean_delta(samples);
    j["baseline_only"] = samples.baseline_only;
    j["perturbed_only"] = samples.perturbed_only;
    j["verdict"] = stats::to_json(verdict);
    j["samples"] = stats::to_json(samples);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyIntersection) throw;
    j["n"] = 0;
    j["mean_delta"] = nullptr;
    j["baseline_only"] = spec.baseline.size();
    j["perturbed_only"] = spec.perturbed.size();
    j["verdict"] = nullptr;
    j["samples"] = nullptr;
  }
  return j;
}

ordered_json matrix_json(const stats::CountMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (const auto& r : m) rows.push_back(r);
  return rows;
}

}  // namespace

void Runner::analyze() {
  const fs::path run = run_dir();
  const auto& idx = index();
  const auto& c = config_;

  ordered_json base_meta_by_variant;
  for (const auto& aspect : c.aspects) {
    const std::string arm = aspect.name();
    const std::size_t perturb_excluded = count_exclusions(exclusions_path(run, arm, "perturb"));

    if (aspect.mode == Mode::kPaper) {
      const auto base = load_outputs<roles::ReviewerOutput>(run, kBaselineArm, idx, std::nullopt,
                                                            roles::reviewer_from_json);
      const auto pert = load_outputs<roles::ReviewerOutput>(run, arm, idx, std::nullopt,
                                                            roles::reviewer_from_json);
      using R = roles::ReviewerOutput;
      std::vector<MetricSpec> specs = {
          {"contribution_score", c.margin_dim,
           metric_map(base, [](const R& o) { return o.contribution_score; }),
           metric_map(pert, [](const R& o) { return o.contribution_score; })},
          {"soundness_score", c.margin_dim,
           metric_map(base, [](const R& o) { return o.soundness_score; }),
           metric_map(pert, [](const R& o) { return o.soundness_score; })},
          {"presentation_score", c.margin_dim,
           metric_map(base, [](const R& o) { return o.presentation_score; }),
           metric_map(pert, [](const R& o) { return o.presentation_score; })},
          {"overall_score", c.margin_overall,
           metric_map(base, [](const R& o) { return o.overall_rating; }),
           metric_map(pert, [](const R& o) { return o.overall_rating; })},
      };
      ordered_json j;
      j["schema_version"] = 1;
      j["aspect"] = arm;
      j["mode"] = std::string(to_string(aspect.mode));
      j["role"] = "reviewer";
      j["variant"] = kReviewerVariant;
      j["alpha"] = c.alpha;
      ordered_json metrics = ordered_json::array();
      for (const auto& s : specs) metrics.push_back(analyze_metric(s, c));
      j["metrics"] = metrics;
      j["excluded"] = {
          {"perturb", perturb_excluded},
          {"baseline_role", count_exclusions(exclusions_path(run, kBaselineArm, "reviewer"))},
          {"perturbed_role", count_exclusions(exclusions_path(run, arm, "reviewer"))}};
      io::write_file_atomic(analysis_path(run, aspect, kReviewerVariant), io::dump_json(j));
    }

    for (auto v : c.variants) {
      const std::string vname(roles::to_string(v));
      const auto base = load_outputs<roles::MetaReviewerOutput>(run, kBaselineArm, idx, v,
                                                                roles::meta_from_json);
      const auto pert =
          load_outputs<roles::MetaReviewerOutput>(run, arm, idx, v, roles::meta_from_json);
      using M = roles::MetaReviewerOutput;

      std::vector<roles::FinalDecision> base_all;
      for (const auto& [id, o] : base) base_all.push_back(o.final_decision);
      const auto weights = c.decision_mapping == stats::MappingScheme::kProportional
                               ? stats::proportional_weights(base_all)
                               : stats::DecisionWeights{};
      auto mapped = [&](const M& o) {
        return stats::map_decision(o.final_decision, c.decision_mapping, weights);
      };

      std::vector<MetricSpec> specs = {
          {"overall_score", c.margin_overall,
           metric_map(base, [](const M& o) { return o.overall_score; }),
           metric_map(pert, [](const M& o) { return o.overall_score; })},
          {"final_decision", c.margin_decision, metric_map(base, mapped),
           metric_map(pert, mapped)},
      };
      if (v == roles::CotVariant::kDimension) {
        specs.push_back({"contribution_score", c.margin_dim,
                         metric_map(base, [](const M& o) { return *o.contribution_score; }),
                         metric_map(pert, [](const M& o) { return *o.contribution_score; })});
        specs.push_back({"soundness_score", c.margin_dim,
                         metric_map(base, [](const M& o) { return *o.soundness_score; }),
                         metric_map(pert, [](const M& o) { return *o.soundness_score; })});
        specs.push_back({"presentation_score", c.margin_dim,
                         metric_map(base, [](const M& o) { return *o.presentation_score; }),
                         metric_map(pert, [](const M& o) { return *o.presentation_score; })});
      }

      ordered_json j;
      j["schema_version"] = 1;
      j["aspect"] = arm;
      j["mode"] = std::string(to_string(aspect.mode));
      j["role"] = "meta";
      j["variant"] = vname;
      j["alpha"] = c.alpha;
      j["decision_mapping"] = std::string(stats::to_string(c.decision_mapping));
      j["decision_weights"] = {{"spotlight", weights.spotlight}, {"oral", weights.oral}};
      ordered_json metrics = ordered_json::array();
      for (const auto& s : specs) metrics.push_back(analyze_metric(s, c));
      j["metrics"] = metrics;

      // Decision-level comparisons over the bundles present in both arms.
      std::vector<std::string> ids;
      std::vector<roles::FinalDecision> before, after;
      std::vector<std::string> score_before, score_after;
      for (const auto& [id, o] : base) {
        auto it = pert.find(id);
        if (it == pert.end()) continue;
        ids.push_back(id);
        before.push_back(o.final_decision);
        after.push_back(it->second.final_decision);
        score_before.push_back(std::to_string(o.overall_score));
        score_after.push_back(std::to_string(it->second.overall_score));
      }
      ordered_json d;
      d["bundle_ids"] = ids;
      d["baseline"] = stats::decision_ids(before);
      d["perturbed"] = stats::decision_ids(after);
      if (ids.empty()) {
        d["kappa"] = nullptr;
        d["acceptance_rate_delta"] = nullptr;
        d["order"] = stats::decision_order();
        d["transition_matrix"] = nullptr;
        d["score_order"] = nullptr;
        d["score_transition_matrix"] = nullptr;
      } else {
        d["kappa"] = stats::cohen_kappa(before, after);
        d["acceptance_rate_delta"] = stats::acceptance_rate_delta(before, after);
        d["order"] = stats::decision_order();
        d["transition_matrix"] = matrix_json(stats::transition_matrix(
            stats::decision_ids(before), stats::decision_ids(after), stats::decision_order()));
        std::vector<std::string> score_order;
        for (int s = 1; s <= 10; ++s) score_order.push_back(std::to_string(s));
        d["score_order"] = score_order;
        d["score_transition_matrix"] =
            matrix_json(stats::transition_matrix(score_before, score_after, score_order));
      }
      j["decisions"] = d;
      const std::string stage = "meta." + vname;
      j["excluded"] = {
          {"perturb", perturb_excluded},
          {"baseline_role", count_exclusions(exclusions_path(run, kBaselineArm, stage))},
          {"perturbed_role", count_exclusions(exclusions_path(run, arm, stage))}};
      io::write_file_atomic(analysis_path(run, aspect, vname), io::dump_json(j));
    }
  }
}

// Accounting ----------------------------------------------------------------

namespace {

std::vector<perturb::PerturbationLog> stored_logs(const fs::path& run,
                                                  const config::PipelineConfig& c,
                                                  const corpus::CorpusIndex& index) {
  std::vector<perturb::PerturbationLog> logs;
  for (const auto& aspect : c.aspects) {
    for (const auto& e : index.entries) {
      const fs::path p = perturbation_log_path(run, aspect, e.paper_id);
      if (fs::exists(p)) logs.push_back(perturb::log_from_json(io::read_json(p)));
    }
  }
  return logs;
}

}  // namespace

void Runner::perturb_stats() {
  const fs::path run = run_dir();
  const auto logs = stored_logs(run, config_, index());
  if (logs.empty()) throw Error(ErrorCode::kMissingAnalysis, "no perturbation logs under " + run.string());
  const auto summary = perturb::summarize_perturbations(logs);
  ordered_json j;
  j["schema_version"] = 1;
  ordered_json rows = ordered_json::array();
  for (const auto& aspect : config_.aspects) {
    auto it = summary.find(aspect.name());
    if (it == summary.end()) continue;
    const auto& s = it->second;
    rows.push_back({{"aspect", aspect.name()},
                    {"bundles", s.bundles},
                    {"sum", s.sum},
                    {"mean", s.mean},
                    {"min", s.min},
                    {"max", s.max}});
  }
  j["aspects"] = rows;
  io::write_file_atomic(run / "perturbation_stats.json", io::dump_json(j));
}

void Runner::eval_manifest() {
  const fs::path run = run_dir();
  const auto logs = stored_logs(run, config_, index());
  std::vector<perturb::FalseClaimBucket> buckets;
  for (const auto& aspect : config_.aspects) {
    for (const auto& e : index().entries) {
      const fs::path p = bucket_path(run, aspect, e.paper_id);
      if (fs::exists(p)) buckets.push_back(perturb::bucket_from_json(io::read_json(p)));
    }
  }
  const auto rows =
      perturb::sample_for_manual_eval(logs, buckets, config_.eval_per_aspect, config_.eval_claims,
                                      derive_seed(config_.seed, "manual-eval"));
  io::write_file_atomic(run / "eval" / "manual_eval.csv", perturb::manifest_csv(rows));
}

void Runner::run_all() {
  perturb();
  review();
  metareview();
  analyze();
  perturb_stats();
  write_manifest("run");
  report::build_report(run_dir(), run_dir() / "report", config_.aspects, config_.variants);
}

// Manifest ------------------------------------------------------------------

void Runner::write_manifest(const std::string& stage) {
  const fs::path path = run_dir() / "run_manifest.json";
  json previous;
  if (fs::exists(path)) previous = io::read_json(path);

  std::map<std::pair<std::string, std::string>, ordered_json> calls;
  if (previous.contains("calls")) {
    for (const auto& c : previous["calls"]) {
      calls[{c.at("request_tag").get<std::string>(), c.at("request_digest").get<std::string>()}] =
          ordered_json(c);
    }
  }
  for (const auto& r : gateway_->records()) {
    calls[{r.request_tag, r.request_digest}] = {{"request_tag", r.request_tag},
                                                {"request_digest", r.request_digest},
                                                {"response_digest", r.response_digest},
                                                {"finish_reason", std::string(llm::to_string(r.finish_reason))},
                                                {"from_cache", r.from_cache}};
  }

  std::vector<std::string> stages;
  if (previous.contains("stages")) stages = previous["stages"].get<std::vector<std::string>>();
  if (std::find(stages.begin(), stages.end(), stage) == stages.end()) stages.push_back(stage);

  ordered_json j;
  j["schema_version"] = 1;
  j["run_id"] = config_.run_id;
  j["started_at"] = previous.contains("started_at") ? previous["started_at"].get<std::string>()
                                                    : started_at_;
  j["updated_at"] = utc_now();
  j["stages"] = stages;
  j["paths"] = {{"out", config_.out.generic_string()},
                {"run_dir", run_dir().generic_string()},
                {"cache_dir", config_.resolved_cache_dir().generic_string()},
                {"corpus", config_.corpus.generic_string()}};
  j["config"] = config::to_json(config_);
  j["models"] = {{"reviewer", config_.reviewer_model},
                 {"meta", config_.meta_model},
                 {"perturb", config_.perturb_model}};
  j["seeds"] = {{"seed", config_.seed}, {"rng", std::string(kRngAlgorithm)}};
  j["provider"] = {{"name", gateway_->provider().name()},
                   {"provider_calls", gateway_->provider_calls()},
                   {"cache_hits", gateway_->cache_hits()}};
  ordered_json list = ordered_json::array();
  for (auto& [key, c] : calls) list.push_back(std::move(c));
  j["calls"] = list;
  io::write_file_atomic(path, io::dump_json(j));
}

}  // namespace rp::pipeline
