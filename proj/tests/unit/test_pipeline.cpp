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

#include <gtest/gtest.h>

#include <atomic>
#include <stdexcept>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/pipeline.hpp"
#include "rp/report.hpp"
#include "rp/text.hpp"
#include "test_util.hpp"

namespace rp::pipeline {
namespace {

using rp::testing::TempDir;
using nlohmann::json;

config::PipelineConfig small_config(const fs::path& out) {
  config::PipelineConfig c;
  c.corpus = rp::testing::corpus6_dir() / "corpus.json";
  c.out = out;
  c.run_id = "t";
  c.seed = 7;
  c.jobs = 3;
  c.aspects = {parse_aspect("paper.soundness"), parse_aspect("rebuttal.tone")};
  c.variants = {roles::CotVariant::kNone};
  return c;
}

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files[fs::relative(e.path(), root).generic_string()] = io::read_file(e.path());
    }
  }
  return files;
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(50);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  try {
    parallel_for(20, 4, [](std::size_t i) {
      if (i == 7 || i == 13) throw std::runtime_error("bad " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "bad 7");
  }
}

TEST(Layout, PathsFollowTheRunDirectoryContract) {
  const fs::path run = "/r";
  EXPECT_EQ(role_output_path(run, "baseline", "b1", std::nullopt), fs::path("/r/baseline/b1.reviewer.json"));
  EXPECT_EQ(role_output_path(run, "review.tone", "b1", roles::CotVariant::kTemplate),
            fs::path("/r/review.tone/b1.meta.template.json"));
  EXPECT_EQ(analysis_path(run, parse_aspect("paper.soundness"), "none"),
            fs::path("/r/analysis/paper.soundness.none.json"));
}

TEST(Runner, StagesProduceAnalysisAndManifest) {
  TempDir tmp;
  auto mock = std::make_shared<llm::MockProvider>();
  Runner runner(small_config(tmp.path()), mock);
  runner.run_all();
  const fs::path run = tmp.path() / "t";

  for (const char* rel : {"baseline/sparse-routing.reviewer.json",
                          "baseline/sparse-routing.meta.none.json",
                          "paper.soundness/sparse-routing.reviewer.json",
                          "rebuttal.tone/sparse-routing.meta.none.json",
                          "paper.soundness/bundles/sparse-routing/paper.mmd",
                          "paper.soundness/logs/sparse-routing.json",
                          "analysis/paper.soundness.reviewer.json",
                          "analysis/paper.soundness.none.json",
                          "analysis/rebuttal.tone.none.json", "report/summary.json",
                          "report/tables/meta_verdict_grid.csv", "run_manifest.json"}) {
    EXPECT_TRUE(fs::exists(run / rel)) << rel;
  }
  // The reviewer never runs on non-paper perturbations.
  EXPECT_FALSE(fs::exists(run / "rebuttal.tone/sparse-routing.reviewer.json"));

  const json analysis = io::read_json(run / "analysis/paper.soundness.none.json");
  EXPECT_EQ(analysis["metrics"][0]["metric"], "overall_score");
  EXPECT_EQ(analysis["metrics"][0]["n"], 6);
  EXPECT_EQ(analysis["metrics"][1]["metric"], "final_decision");
  EXPECT_EQ(analysis["decisions"]["bundle_ids"].size(), 6u);

  const json manifest = io::read_json(run / "run_manifest.json");
  EXPECT_EQ(manifest["run_id"], "t");
  EXPECT_EQ(manifest["calls"].size(), runner.gateway().records().size());
  EXPECT_EQ(manifest["seeds"]["seed"], 7);
  EXPECT_FALSE(manifest["config"].contains("api_key"));
}

TEST(Runner, WarmCacheRerunMakesNoProviderCalls) {
  TempDir tmp;
  {
    Runner first(small_config(tmp.path()), std::make_shared<llm::MockProvider>());
    first.run_all();
  }
  const auto before = read_tree(tmp.path() / "t" / "report");
  auto counting = std::make_shared<llm::MockProvider>();
  Runner second(small_config(tmp.path()), counting);
  second.run_all();
  EXPECT_EQ(counting->calls(), 0u);
  EXPECT_EQ(read_tree(tmp.path() / "t" / "report"), before);
}

TEST(Runner, InFlightRequestsStayWithinPolicy) {
  TempDir tmp;
  auto mock = std::make_shared<llm::MockProvider>();
  mock->set_delay(std::chrono::milliseconds(2));
  auto c = small_config(tmp.path());
  c.jobs = 6;
  c.max_in_flight = 2;
  Runner runner(c, mock);
  runner.perturb();
  runner.review();
  EXPECT_LE(mock->max_observed_in_flight(), 2);
  EXPECT_GT(mock->calls(), 0u);
}

TEST(Runner, FailedPerturbationIsExcludedAndCounted) {
  TempDir tmp;
  llm::MockRule rule;
  rule.tag_prefix = "perturb/paper.soundness/sparse-routing";
  rule.responses = {"No edits were necessary."};
  auto mock = std::make_shared<llm::MockProvider>(std::vector<llm::MockRule>{rule});
  // Fixture papers share boilerplate sections; one job keeps the first
  // bundle ahead of every identical prompt.
  auto cfg = small_config(tmp.path());
  cfg.jobs = 1;
  Runner runner(cfg, mock);
  runner.perturb();
  runner.review();
  runner.metareview();
  runner.analyze();
  const fs::path run = tmp.path() / "t";
  EXPECT_FALSE(fs::exists(run / "paper.soundness/bundles/sparse-routing"));
  const json ex = io::read_json(run / "paper.soundness/excluded.perturb.json");
  ASSERT_EQ(ex["excluded"].size(), 1u);
  EXPECT_EQ(ex["excluded"][0]["bundle_id"], "sparse-routing");
  EXPECT_NE(ex["excluded"][0]["reason"].get<std::string>().find("AllEditsFailed"),
            std::string::npos);

  for (const char* variant : {"none", "reviewer"}) {
    const json analysis =
        io::read_json(run / "analysis" / (std::string("paper.soundness.") + variant + ".json"));
    EXPECT_EQ(analysis["excluded"]["perturb"], 1);
    EXPECT_EQ(analysis["metrics"][0]["n"], 5);
    EXPECT_EQ(analysis["metrics"][0]["baseline_only"], 1);
  }
}

TEST(Runner, UnparseableMetaReviewIsDroppedFromPairing) {
  TempDir tmp;
  llm::MockRule rule;
  rule.tag_prefix = "meta/none/baseline/offline-rl";
  rule.responses = {"I cannot decide."};
  auto mock = std::make_shared<llm::MockProvider>(std::vector<llm::MockRule>{rule});
  auto c = small_config(tmp.path());
  c.aspects = {parse_aspect("review.conclusion")};
  Runner runner(c, mock);
  runner.perturb();
  runner.metareview();
  runner.analyze();
  const fs::path run = tmp.path() / "t";
  const json ex = io::read_json(run / "baseline/excluded.meta.none.json");
  ASSERT_EQ(ex["excluded"].size(), 1u);
  const json analysis = io::read_json(run / "analysis/review.conclusion.none.json");
  EXPECT_EQ(analysis["excluded"]["baseline_role"], 1);
  EXPECT_EQ(analysis["metrics"][0]["n"], 5);
  EXPECT_EQ(analysis["metrics"][0]["perturbed_only"], 1);
}

TEST(Runner, EvalManifestNeedsEnoughEdits) {
  TempDir tmp;
  auto c = small_config(tmp.path());
  c.eval_per_aspect = 2;
  c.eval_claims = 0;
  Runner runner(c, std::make_shared<llm::MockProvider>());
  runner.perturb();
  runner.eval_manifest();
  const auto csv = io::read_file(tmp.path() / "t" / "eval" / "manual_eval.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);  // header + 2 aspects x 2

  c.eval_per_aspect = 10000;
  Runner greedy(c, std::make_shared<llm::MockProvider>());
  try {
    greedy.eval_manifest();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSamples);
  }
}

// Report ----------------------------------------------------------------------

TEST(Heatmap, DiagonalMatrixShadesOnlyTheDiagonal) {
  const stats::CountMatrix m = {{3, 0, 0, 0}, {0, 2, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 4}};
  const auto svg = report::render_heatmap(m, stats::decision_order());
  // Zero cells keep the background fill; nonzero cells are darker.
  std::size_t white = 0, pos = 0;
  while ((pos = svg.find("fill=\"rgb(255,255,255)\"", pos)) != std::string::npos) {
    ++white;
    ++pos;
  }
  EXPECT_EQ(white, 12u);
  EXPECT_NE(svg.find(">4</text>"), std::string::npos);
}

TEST(Heatmap, MatchesCommittedGolden) {
  const stats::CountMatrix m = {{2, 1}, {0, 3}};
  const auto svg = report::render_heatmap(m, {"reject", "accept"}, "fixture");
  EXPECT_EQ(svg, io::read_file(rp::testing::test_dir() / "golden" / "heatmap_2x2.svg"));
  EXPECT_EQ(svg, report::render_heatmap(m, {"reject", "accept"}, "fixture"));
}

TEST(Heatmap, NonSquareIsShapeMismatch) {
  const stats::CountMatrix m(3, std::vector<std::size_t>(4, 0));
  try {
    report::render_heatmap(m, {"a", "b", "c"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Intensity, NormalizedToLargestMagnitude) {
  EXPECT_EQ(report::intensities({0.5, -1.0, 0.25, 0.0}), (std::vector<int>{50, 100, 25, 0}));
  EXPECT_EQ(report::intensities({0.0, 0.0}), (std::vector<int>{0, 0}));
}

TEST(StableManifest, DropsVolatileFields) {
  json m = {{"run_id", "x"},
            {"started_at", "t0"},
            {"updated_at", "t1"},
            {"paths", {{"out", "/tmp"}}},
            {"provider", {{"provider_calls", 3}}},
            {"config", {{"corpus", "/c"}, {"seed", 1}, {"provider", {{"mock_script", nullptr}}}}},
            {"calls", {{{"request_tag", "a"}, {"from_cache", true}}}}};
  const auto s = report::stable_manifest(m);
  for (const char* k : {"run_id", "started_at", "updated_at", "paths", "provider"}) {
    EXPECT_FALSE(s.contains(k)) << k;
  }
  EXPECT_FALSE(s["config"].contains("corpus"));
  EXPECT_EQ(s["config"]["seed"], 1);
  EXPECT_FALSE(s["calls"][0].contains("from_cache"));
}

class ReportFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    tmp_ = new TempDir;
    auto c = small_config(tmp_->path());
    c.variants = {roles::CotVariant::kNone, roles::CotVariant::kDimension,
                  roles::CotVariant::kTemplate};
    Runner runner(c, std::make_shared<llm::MockProvider>());
    runner.run_all();
  }
  static void TearDownTestSuite() { delete tmp_; }
  static fs::path run() { return tmp_->path() / "t"; }
  static TempDir* tmp_;
};

TempDir* ReportFixture::tmp_ = nullptr;

TEST_F(ReportFixture, EmptyAspectListIsMissingAnalysis) {
  try {
    report::build_report(run(), run() / "r2", {}, {roles::CotVariant::kNone});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAnalysis);
  }
}

TEST_F(ReportFixture, UnanalyzedAspectIsMissingAnalysis) {
  try {
    report::build_report(run(), run() / "r2", {parse_aspect("review.tone")},
                         {roles::CotVariant::kNone});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingAnalysis);
  }
}

TEST_F(ReportFixture, RebuildIsByteIdenticalAndLeavesRunUntouched) {
  const auto analysis_before = read_tree(run() / "analysis");
  const auto first = read_tree(run() / "report");
  report::build_report(run(), run() / "report",
                       {parse_aspect("paper.soundness"), parse_aspect("rebuttal.tone")},
                       {roles::CotVariant::kNone, roles::CotVariant::kDimension,
                        roles::CotVariant::kTemplate});
  EXPECT_EQ(read_tree(run() / "report"), first);
  EXPECT_EQ(read_tree(run() / "analysis"), analysis_before);
}

TEST_F(ReportFixture, VerdictGridHasOneRowPerAspectAndVariantColumns) {
  const auto csv = io::read_file(run() / "report/tables/meta_verdict_grid.csv");
  const auto first_line = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(first_line,
            "mode,aspect,dimension_final_decision,dimension_overall_score,"
            "none_final_decision,none_overall_score,template_final_decision,"
            "template_overall_score");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST_F(ReportFixture, TableNumbersEqualAnalysisValues) {
  const json analysis = io::read_json(run() / "analysis/rebuttal.tone.template.json");
  const double mean = analysis["metrics"][0]["mean_delta"].get<double>();
  const auto csv = io::read_file(run() / "report/tables/meta_deltas.csv");
  const std::string row = "rebuttal,tone,template,overall_score,6," + text::format_number(mean) + ",";
  EXPECT_NE(csv.find(row), std::string::npos) << row;
  EXPECT_EQ(std::stod(text::format_number(mean)), mean);
}

TEST_F(ReportFixture, SummaryCarriesSchemaVersionAndExclusions) {
  const json s = io::read_json(run() / "report/summary.json");
  EXPECT_EQ(s["schema_version"], report::kSchemaVersion);
  EXPECT_TRUE(s["excluded"].contains("paper.soundness"));
  EXPECT_EQ(s["verdict_grid"]["meta"].size(), 2u);
  EXPECT_TRUE(s["verdict_grid"]["reviewer"].contains("paper.soundness"));
  EXPECT_TRUE(fs::exists(run() / "report/run_manifest.json"));
  EXPECT_TRUE(fs::exists(run() / "report/figures/transition_paper.soundness.none.svg"));
  EXPECT_TRUE(fs::exists(run() / "report/figures/acceptance_delta_bars.svg"));
}

}  // namespace
}  // namespace rp::pipeline
