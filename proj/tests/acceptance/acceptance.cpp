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

// Prints one PASS/FAIL line per acceptance criterion; exits 1 on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../oracles/kappa_oracle.hpp"
#include "../oracles/span_oracle.hpp"
#include "../oracles/t_oracle.hpp"
#include "../oracles/wilcoxon_oracle.hpp"
#include "rp/aspect.hpp"
#include "rp/config.hpp"
#include "rp/corpus.hpp"
#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/llm.hpp"
#include "rp/perturb.hpp"
#include "rp/pipeline.hpp"
#include "rp/roles.hpp"
#include "rp/stats.hpp"
#include "rp/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kTestDir = RP_TEST_DIR;
const fs::path kCorpus6 = kTestDir / "fixtures" / "corpus6";
const fs::path kGoldenReport = kTestDir / "golden" / "report6";

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Scratch {
 public:
  explicit Scratch(const std::string& name)
      : path_(fs::temp_directory_path() /
              ("rp-accept-" + std::to_string(::getpid()) + "-" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).generic_string()] = rp::io::read_file(e.path());
    }
  }
  return files;
}

// Names of files that differ, are missing or are extra.
std::vector<std::string> tree_diff(const fs::path& want, const fs::path& got) {
  const auto a = read_tree(want);
  const auto b = read_tree(got);
  std::vector<std::string> out;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) {
      out.push_back("missing " + k);
    } else if (it->second != v) {
      out.push_back("differs " + k);
    }
  }
  for (const auto& [k, v] : b) {
    if (!a.count(k)) out.push_back("extra " + k);
  }
  return out;
}

std::vector<rp::corpus::Bundle> fixtures() {
  return rp::corpus::load_corpus(rp::corpus::load_corpus_index(kCorpus6 / "corpus.json"));
}

// 1 ---------------------------------------------------------------------------

Outcome wilcoxon_oracle() {
  std::size_t exhaustive = 0, random = 0, normal = 0;
  double worst_exact = 0.0, worst_normal = 0.0;
  auto check = [&](const std::vector<double>& d, const rp::oracle::OneSided& want,
                   double tol, double& worst) {
    const auto got = rp::stats::wilcoxon_signed_rank(d);
    const double err =
        std::max(std::fabs(got.p_greater - want.p_greater), std::fabs(got.p_less - want.p_less));
    worst = std::max(worst, err);
    return err <= tol;
  };
  Outcome o;
  for (std::size_t n = 1; n <= 10; ++n) {
    std::vector<std::vector<double>> magnitudes(3);
    for (std::size_t i = 0; i < n; ++i) {
      magnitudes[0].push_back(static_cast<double>(i + 1));
      magnitudes[1].push_back(static_cast<double>((i + 2) / 2));
      magnitudes[2].push_back(i == 0 ? 0.0 : static_cast<double>((i + 1) / 3 + 1) * 0.5);
    }
    for (const auto& m : magnitudes) {
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        std::vector<double> d(m);
        for (std::size_t i = 0; i < n; ++i) {
          if (mask & (1u << i)) d[i] = -d[i];
        }
        ++exhaustive;
        if (!check(d, rp::oracle::brute_force(d), 1e-12, worst_exact)) o.ok = false;
      }
    }
  }
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 20;
    const bool tied = trial % 2 == 0;
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) {
      d.push_back(tied ? static_cast<double>(static_cast<int>(rng() % 9) - 4)
                       : std::uniform_real_distribution<double>(-5, 5)(rng));
    }
    ++random;
    if (!check(d, rp::oracle::brute_force(d), 1e-12, worst_exact)) o.ok = false;
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d;
    const double shift = std::uniform_real_distribution<double>(-1, 1)(rng);
    for (int i = 0; i < 50; ++i) {
      d.push_back(trial % 2 == 0 ? std::normal_distribution<double>(shift, 1.5)(rng)
                                 : static_cast<double>(static_cast<int>(rng() % 11) - 5));
    }
    ++normal;
    if (rp::stats::wilcoxon_signed_rank(d).method != rp::stats::WilcoxonMethod::kNormal) {
      o.ok = false;
    }
    if (!check(d, rp::oracle::by_recursion(d), 2e-2, worst_normal)) o.ok = false;
  }
  std::ostringstream s;
  s << exhaustive << " sign patterns + " << random << " random exact (max err " << worst_exact
    << "), " << normal << " N=50 normal (max err " << worst_normal << ")";
  o.detail = s.str();
  return o;
}

// 2 ---------------------------------------------------------------------------

Outcome tost_oracle() {
  std::mt19937_64 rng(202);
  Outcome o;
  std::size_t stat_ok = 0, verdict_ok = 0, equivalent = 0;
  const int cases = 1000;
  for (int trial = 0; trial < cases; ++trial) {
    const std::size_t n = 2 + rng() % 59;
    const double mean = std::uniform_real_distribution<double>(-1.5, 1.5)(rng);
    const double sd = std::uniform_real_distribution<double>(0.05, 2.5)(rng);
    const double margin = std::uniform_real_distribution<double>(0.1, 1.5)(rng);
    const double alpha = std::array<double, 3>{0.01, 0.05, 0.1}[rng() % 3];
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(std::normal_distribution<double>(mean, sd)(rng));

    double sum = 0;
    for (double x : d) sum += x;
    const double dbar = sum / static_cast<double>(n);
    double ss = 0;
    for (double x : d) ss += (x - dbar) * (x - dbar);
    const double se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    const double t_lower = (dbar + margin) / se;
    const double t_upper = (dbar - margin) / se;

    const auto got = rp::stats::tost_equivalence(d, margin, alpha);
    if (std::fabs(got.t_lower - t_lower) <= 1e-9 && std::fabs(got.t_upper - t_upper) <= 1e-9) {
      ++stat_ok;
    }
    const bool want = rp::oracle::tost_equivalent(t_lower, t_upper, static_cast<double>(n - 1), alpha);
    if (got.equivalent == want) ++verdict_ok;
    equivalent += want;
  }
  o.ok = stat_ok == cases && verdict_ok == cases;
  o.detail = "statistics " + std::to_string(stat_ok) + "/1000, verdicts " +
             std::to_string(verdict_ok) + "/1000 (" + std::to_string(equivalent) + " equivalent)";
  return o;
}

// 3 ---------------------------------------------------------------------------

Outcome kappa_oracle() {
  std::mt19937_64 rng(303);
  Outcome o;
  std::size_t match = 0, identical = 0;
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + rng() % 100;
    const std::size_t k = 1 + rng() % 5;
    std::vector<std::string> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back("L" + std::to_string(rng() % k));
      b.push_back(rng() % 3 == 0 ? a.back() : "L" + std::to_string(rng() % k));
    }
    const double err = std::fabs(rp::stats::cohen_kappa(a, b) - rp::oracle::kappa(a, b));
    worst = std::max(worst, err);
    match += err <= 1e-12;
    identical += rp::stats::cohen_kappa(a, a) == 1.0;
  }
  o.ok = match == 500 && identical == 500;
  std::ostringstream s;
  s << "oracle " << match << "/500 (max err " << worst << "), identical " << identical << "/500";
  o.detail = s.str();
  return o;
}

// 4 ---------------------------------------------------------------------------

Outcome span_edits() {
  std::mt19937_64 rng(404);
  const std::vector<std::string> vocab = {"the", "model", "loss", "we", "train", "(a)",
                                          "1.5", "data.", "on", "x+y", "[7]", "is"};
  Outcome o;
  std::size_t applied = 0, failed = 0, bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::string doc;
    std::vector<std::string> used;
    const std::size_t words = 4 + rng() % 30;
    for (std::size_t i = 0; i < words; ++i) {
      used.push_back(vocab[rng() % vocab.size()]);
      doc += used.back();
      const auto sep = rng() % 6;
      doc += sep == 0 ? "\n" : sep == 1 ? "  " : " ";
    }
    // Half the anchors are runs of the document's own words.
    auto anchor = [&] {
      std::string a;
      const std::size_t k = 1 + rng() % 3;
      const std::size_t from = rng() % words;
      const bool own = rng() % 2 == 0;
      for (std::size_t i = 0; i < k; ++i) {
        a += (i ? " " : "") +
             (own ? used[std::min(from + i, words - 1)] : vocab[rng() % vocab.size()]);
      }
      return a;
    };
    rp::perturb::EditRecord edit;
    edit.start_anchor = anchor();
    edit.end_anchor = anchor();
    edit.replacement = "REPLACED " + std::to_string(trial);
    const std::string before = doc;
    const auto want = rp::oracle::locate(doc, edit.start_anchor, edit.end_anchor,
                                         rp::perturb::kMaxStartOccurrences);
    try {
      const auto out = rp::perturb::apply_edit(doc, edit);
      ++applied;
      const bool good = want.outcome == rp::oracle::SpanOutcome::kFound &&
                        out.compare(0, want.begin, doc, 0, want.begin) == 0 &&
                        out.substr(want.begin, edit.replacement.size()) == edit.replacement &&
                        out.substr(want.begin + edit.replacement.size()) == doc.substr(want.end) &&
                        doc == before;
      bad += !good;
    } catch (const rp::Error&) {
      ++failed;
      std::vector<rp::perturb::EditRecord> batch{edit};
      const auto out = rp::perturb::apply_edits(doc, batch);
      const bool good = want.outcome != rp::oracle::SpanOutcome::kFound && out == before &&
                        doc == before && !batch[0].applied;
      bad += !good;
    }
  }
  o.ok = bad == 0;
  o.detail = std::to_string(applied) + " applied, " + std::to_string(failed) +
             " rejected, " + std::to_string(bad) + " violations";
  return o;
}

// 5 ---------------------------------------------------------------------------

// True when s consists only of rating digits, documented stances and
// separators.
bool only_rating_tokens(std::string s, const rp::perturb::FlipRules& rules) {
  std::vector<std::string> phrases(rules.stances);
  phrases.push_back(rules.target_stance);
  std::sort(phrases.begin(), phrases.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& p : phrases) {
    for (auto pos = s.find(p); pos != std::string::npos; pos = s.find(p)) s.erase(pos, p.size());
  }
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isdigit(static_cast<unsigned char>(c)) || c == ' ' || c == ':' || c == '/' ||
           c == '(' || c == ')' || c == '.' || c == ',';
  });
}

Outcome rule_operators() {
  const auto rules = rp::perturb::default_flip_rules();
  const auto bundles = fixtures();
  std::size_t reviews = 0, flip_ok = 0;
  for (const auto& b : bundles) {
    for (const auto& r : b.reviews) {
      ++reviews;
      const auto out = rp::perturb::flip_conclusion(r);
      bool ok = rp::perturb::flip_conclusion(out).raw_text == out.raw_text &&
                out.overall_rating == 1 && out.summary == r.summary &&
                out.strengths == r.strengths && out.weaknesses == r.weaknesses &&
                out.contribution_score == r.contribution_score &&
                out.soundness_score == r.soundness_score &&
                out.presentation_score == r.presentation_score;
      const auto a = rp::text::split_lines(r.raw_text);
      const auto c = rp::text::split_lines(out.raw_text);
      ok = ok && a.size() == c.size();
      std::size_t changed = 0;
      for (std::size_t i = 0; ok && i < a.size(); ++i) {
        if (a[i] == c[i]) continue;
        ++changed;
        const bool labelled = std::any_of(rules.rating_labels.begin(), rules.rating_labels.end(),
                                          [&](const auto& l) { return a[i].rfind(l, 0) == 0; });
        std::size_t p = 0;
        while (p < a[i].size() && p < c[i].size() && a[i][p] == c[i][p]) ++p;
        std::size_t q = 0;
        while (q < a[i].size() - p && q < c[i].size() - p &&
               a[i][a[i].size() - 1 - q] == c[i][c[i].size() - 1 - q]) {
          ++q;
        }
        ok = labelled && only_rating_tokens(std::string(a[i].substr(p, a[i].size() - p - q)), rules) &&
             only_rating_tokens(std::string(c[i].substr(p, c[i].size() - p - q)), rules);
      }
      flip_ok += ok && changed > 0;
    }
  }

  rp::perturb::FalseClaimBucket bucket{"p", {}};
  for (int i = 0; i < 5; ++i) {
    bucket.claims.push_back({"Claim number " + std::to_string(i) + " is unsupported.",
                             "Section 3 says otherwise.", "It changes the conclusion."});
  }
  std::size_t insert_ok = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& b = bundles[static_cast<std::size_t>(trial) % bundles.size()];
    const auto& r = b.reviews[static_cast<std::size_t>(trial / 6) % b.reviews.size()];
    const auto [out, chosen] =
        rp::perturb::insert_false_claims(r, bucket, static_cast<std::uint64_t>(trial));
    std::set<std::size_t> distinct(chosen.begin(), chosen.end());
    std::string added;
    for (auto i : chosen) added += "\n- " + bucket.claims[i].claim;
    std::size_t present = 0;
    for (const auto& claim : bucket.claims) present += out.weaknesses.find(claim.claim) != std::string::npos;
    const bool ok = chosen.size() == 3 && distinct.size() == 3 && *distinct.rbegin() < 5 &&
                    present == 3 && out.weaknesses.rfind(r.weaknesses, 0) == 0 &&
                    out.summary == r.summary && out.strengths == r.strengths &&
                    out.review_id == r.review_id && out.paper_id == r.paper_id &&
                    out.overall_rating == r.overall_rating &&
                    out.contribution_score == r.contribution_score &&
                    out.soundness_score == r.soundness_score &&
                    out.presentation_score == r.presentation_score;
    insert_ok += ok;
  }
  Outcome o;
  o.ok = flip_ok == reviews && insert_ok == 200;
  o.detail = "flip " + std::to_string(flip_ok) + "/" + std::to_string(reviews) +
             " fixture reviews, insert " + std::to_string(insert_ok) + "/200 trials";
  return o;
}

// 6 ---------------------------------------------------------------------------

Outcome single_target() {
  Scratch tmp("single");
  rp::config::PipelineConfig c;
  c.corpus = kCorpus6 / "corpus.json";
  c.out = tmp.path();
  c.run_id = "single";
  c.seed = 7;
  c.variants = {rp::roles::CotVariant::kNone};
  rp::pipeline::Runner runner(c, std::make_shared<rp::llm::MockProvider>());
  runner.perturb();

  const auto index = rp::corpus::load_corpus_index(c.corpus);
  std::size_t aspects_ok = 0;
  std::string first_failure;
  for (const auto& aspect : rp::kAllAspects) {
    bool ok = true;
    for (const auto& entry : index.entries) {
      const fs::path base = entry.dir;
      const fs::path pert = rp::pipeline::perturbed_bundle_dir(c.run_dir(), aspect, entry.paper_id);
      if (!fs::exists(pert)) {
        ok = false;
        break;
      }
      std::map<std::string, bool> differs = {{"paper", false}, {"review", false}, {"rebuttal", false}};
      for (const auto& e : fs::directory_iterator(base)) {
        const auto name = e.path().filename().string();
        const auto component = name.substr(0, name.find_first_of("_."));
        if (rp::io::read_file(e.path()) != rp::io::read_file(pert / name)) differs[component] = true;
      }
      const auto count = std::count_if(differs.begin(), differs.end(),
                                       [](const auto& kv) { return kv.second; });
      const std::string want = aspect.mode == rp::Mode::kPaper    ? "paper"
                               : aspect.mode == rp::Mode::kReview ? "review"
                                                                  : "rebuttal";
      if (count != 1 || !differs[want]) ok = false;
    }
    aspects_ok += ok;
    if (!ok && first_failure.empty()) first_failure = aspect.name();
  }
  Outcome o;
  o.ok = aspects_ok == 9;
  o.detail = std::to_string(aspects_ok) + "/9 aspects" +
             (first_failure.empty() ? "" : ", first failure " + first_failure);
  return o;
}

// 7 ---------------------------------------------------------------------------

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

Outcome golden_run() {
  Scratch tmp("golden");
  const std::string cmd = std::string("env -u RP_API_KEY -u RP_BASE_URL ") + quoted(RP_CLI_PATH) +
                          " run --corpus " + quoted(kCorpus6 / "corpus.json") + " --out " +
                          quoted(tmp.path()) +
                          " --run-id golden --provider mock --seed 7 > " +
                          quoted(tmp.path() / "cli.log") + " 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(cmd.c_str());
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  if (rc != 0) {
    o.ok = false;
    o.detail = "cli exited " + std::to_string(rc) + ": " + rp::io::read_file(tmp.path() / "cli.log");
    return o;
  }
  const fs::path report = tmp.path() / "golden" / "report";
  const auto diff = tree_diff(kGoldenReport, report);
  const auto manifest = rp::io::read_json(tmp.path() / "golden" / "run_manifest.json");
  const auto summary = rp::io::read_json(report / "summary.json");
  std::set<std::string> verdicts;
  for (const auto& [k, v] : summary["verdict_counts"].items()) {
    if (v.get<int>() > 0) verdicts.insert(k);
  }
  const auto grid = rp::io::read_file(report / "tables" / "meta_verdict_grid.csv");
  std::size_t grid_verdicts = 0;
  for (const char* v : {"increase", "decrease", "invariance", "inconclusive"}) {
    grid_verdicts += grid.find(v) != std::string::npos;
  }
  o.ok = diff.empty() && manifest["provider"]["name"] == "mock" && grid_verdicts == 4 &&
         secs < 60.0;
  std::ostringstream s;
  s << read_tree(report).size() << " report files, " << diff.size() << " differ from golden"
    << (diff.empty() ? "" : " (" + diff.front() + ")") << ", " << grid_verdicts
    << "/4 verdicts in meta grid, " << verdicts.size() << " overall, "
    << manifest["provider"]["provider_calls"] << " mock calls, " << secs << " s";
  o.detail = s.str();
  return o;
}

// 8 ---------------------------------------------------------------------------

Outcome stratified_sampling() {
  std::vector<rp::corpus::PoolEntry> pool;
  auto add = [&](std::size_t n, const char* prefix, rp::corpus::DecisionCategory c) {
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(prefix + std::to_string(i), c);
  };
  add(1800, "poster-", rp::corpus::DecisionCategory::kPoster);
  add(370, "spotlight-", rp::corpus::DecisionCategory::kSpotlight);
  add(90, "oral-", rp::corpus::DecisionCategory::kOral);
  const auto a = rp::corpus::stratified_sample(pool, {406, 83, 19}, 2024);
  const auto b = rp::corpus::stratified_sample(pool, {406, 83, 19}, 2024);
  std::map<rp::corpus::DecisionCategory, std::size_t> counts;
  std::map<std::string, rp::corpus::DecisionCategory> cat(pool.begin(), pool.end());
  for (const auto& id : a) ++counts[cat.at(id)];
  Outcome o;
  o.ok = pool.size() == 2260 && a.size() == 508 &&
         counts[rp::corpus::DecisionCategory::kPoster] == 406 &&
         counts[rp::corpus::DecisionCategory::kSpotlight] == 83 &&
         counts[rp::corpus::DecisionCategory::kOral] == 19 && a == b &&
         std::set<std::string>(a.begin(), a.end()).size() == a.size();
  o.detail = "pool 2260, drew " + std::to_string(counts[rp::corpus::DecisionCategory::kPoster]) +
             "/" + std::to_string(counts[rp::corpus::DecisionCategory::kSpotlight]) + "/" +
             std::to_string(counts[rp::corpus::DecisionCategory::kOral]) +
             (a == b ? ", repeat identical" : ", repeat differs");
  return o;
}

// 9 ---------------------------------------------------------------------------

Outcome prompt_fidelity() {
  std::size_t total = 0, match = 0;
  for (const char* id : rp::roles::kTemplateIds) {
    ++total;
    match += rp::roles::load_template(id) ==
             rp::io::read_file(kTestDir / "golden" / "prompts" / (std::string(id) + ".txt"));
  }
  const auto reviewer = rp::roles::load_template("reviewer");
  const bool rubric = reviewer.find("1 = strong reject.") != std::string::npos &&
                      reviewer.find("marginally below the acceptance threshold") != std::string::npos;
  Outcome o;
  o.ok = total > 0 && match == total && rubric;
  o.detail = std::to_string(match) + "/" + std::to_string(total) + " templates match" +
             (rubric ? ", rubric lines verbatim" : ", rubric lines missing");
  return o;
}

// 10 --------------------------------------------------------------------------

Outcome warm_cache_replay() {
  Scratch tmp("replay");
  rp::config::PipelineConfig c;
  c.corpus = kCorpus6 / "corpus.json";
  c.out = tmp.path();
  c.seed = 7;
  c.run_id = "cold";
  {
    auto cold = std::make_shared<rp::llm::MockProvider>();
    rp::pipeline::Runner runner(c, cold);
    runner.run_all();
    if (cold->calls() == 0) return {false, "cold run made no provider calls"};
  }
  c.run_id = "warm";
  auto warm = std::make_shared<rp::llm::MockProvider>();
  rp::pipeline::Runner runner(c, warm);
  runner.run_all();

  std::size_t artifacts = 0;
  std::vector<std::string> diff;
  for (const auto& [rel, bytes] : read_tree(tmp.path() / "cold")) {
    if (rel == "run_manifest.json") continue;
    ++artifacts;
    const fs::path other = tmp.path() / "warm" / rel;
    if (!fs::exists(other) || rp::io::read_file(other) != bytes) diff.push_back(rel);
  }
  const auto cold_files = read_tree(tmp.path() / "cold").size();
  const auto warm_files = read_tree(tmp.path() / "warm").size();
  Outcome o;
  o.ok = warm->calls() == 0 && diff.empty() && cold_files == warm_files;
  o.detail = std::to_string(warm->calls()) + " provider calls on warm rerun, " +
             std::to_string(artifacts) + " artifacts compared, " + std::to_string(diff.size()) +
             " differ" + (diff.empty() ? "" : " (" + diff.front() + ")");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"wilcoxon oracle equivalence", wilcoxon_oracle},
      {"tost oracle equivalence", tost_oracle},
      {"kappa oracle", kappa_oracle},
      {"span-edit safety", span_edits},
      {"rule-based operators", rule_operators},
      {"single-target invariant", single_target},
      {"end-to-end golden run", golden_run},
      {"stratified sampling", stratified_sampling},
      {"prompt fidelity", prompt_fidelity},
      {"warm-cache replay", warm_cache_replay},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (i == 0 && secs >= 30.0) {
      o.ok = false;
      o.detail += ", over 30 s";
    }
    failures += !o.ok;
    std::cout << (o.ok ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << " [" << std::fixed << std::setprecision(2) << secs << " s]"
              << std::defaultfloat << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
