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

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/aspect.hpp"
#include "rp/config.hpp"
#include "rp/corpus.hpp"
#include "rp/llm.hpp"
#include "rp/roles.hpp"

namespace rp::pipeline {

namespace fs = std::filesystem;

// Run directory layout --------------------------------------------------------

inline constexpr const char* kBaselineArm = "baseline";
inline constexpr const char* kReviewerVariant = "reviewer";

/// <run>/<arm>/<bundle>.reviewer.json or <bundle>.meta.<variant>.json.
fs::path role_output_path(const fs::path& run_dir, const std::string& arm,
                          const std::string& bundle_id,
                          std::optional<roles::CotVariant> variant);

fs::path perturbed_bundle_dir(const fs::path& run_dir, const PerturbationAspect& aspect,
                              const std::string& bundle_id);
fs::path perturbation_log_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                               const std::string& bundle_id);
fs::path bucket_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                     const std::string& bundle_id);
/// <run>/<arm>/excluded.<stage>.json
fs::path exclusions_path(const fs::path& run_dir, const std::string& arm,
                         const std::string& stage);
/// <run>/analysis/<aspect>.<variant|reviewer>.json
fs::path analysis_path(const fs::path& run_dir, const PerturbationAspect& aspect,
                       const std::string& variant);

struct Exclusion {
  std::string bundle_id;
  std::string reason;
};

// Worker pool ---------------------------------------------------------------

/// Runs fn(0..n-1) on up to `jobs` threads. Exceptions are captured per index
/// and the first (lowest index) is rethrown after all work finishes.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// Runner --------------------------------------------------------------------

class Runner {
 public:
  /// Uses the provider named by the configuration.
  explicit Runner(config::PipelineConfig config);
  /// Uses the given provider; the acceptance suite injects a counting mock.
  Runner(config::PipelineConfig config, std::shared_ptr<llm::Provider> provider);

  const config::PipelineConfig& config() const { return config_; }
  llm::Gateway& gateway() { return *gateway_; }
  fs::path run_dir() const { return config_.run_dir(); }

  /// Perturbed copies of every bundle for every configured aspect.
  void perturb();
  /// Reviewer on baseline papers and on paper-mode perturbations.
  void review();
  /// Meta-reviewer for every configured variant on baseline and perturbed
  /// bundles.
  void metareview();
  /// analysis/<aspect>.<variant>.json for every configured combination.
  void analyze();
  /// perturbation_stats.json from the stored logs.
  void perturb_stats();
  /// eval/manual_eval.csv from the stored logs and buckets.
  void eval_manifest();
  /// perturb, review, metareview, analyze, perturb_stats and the report.
  void run_all();

  /// Merges this invocation's calls into <run>/run_manifest.json.
  void write_manifest(const std::string& stage);

  const std::vector<corpus::Bundle>& baseline();
  const corpus::CorpusIndex& index();

 private:
  roles::RoleConfig reviewer_config() const;
  roles::RoleConfig meta_config() const;

  config::PipelineConfig config_;
  std::shared_ptr<llm::Gateway> gateway_;
  std::optional<corpus::CorpusIndex> index_;
  std::optional<std::vector<corpus::Bundle>> baseline_;
  std::string started_at_;
  std::vector<std::string> stages_;
};

/// UTC timestamp "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_now();

}  // namespace rp::pipeline
