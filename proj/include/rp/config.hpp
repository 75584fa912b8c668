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

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/aspect.hpp"
#include "rp/roles.hpp"
#include "rp/stats.hpp"

namespace rp::config {

namespace fs = std::filesystem;

// Key/value documents ---------------------------------------------------------

using Value = std::variant<bool, std::int64_t, double, std::string, std::vector<std::string>>;

/// Flat "table.key" -> value view of a TOML-style document. Supports [table]
/// headers, bare keys, basic strings, integers, floats, booleans, arrays of
/// strings and `#` comments. Throws kConfigError with the line number.
std::map<std::string, Value> parse_document(std::string_view text);

// Pipeline configuration ----------------------------------------------------

struct PipelineConfig {
  fs::path corpus;
  fs::path out = "runs";
  std::string run_id;
  bool resume = false;
  std::uint64_t seed = 0;
  int jobs = 4;
  std::vector<PerturbationAspect> aspects{kAllAspects.begin(), kAllAspects.end()};
  std::vector<roles::CotVariant> variants{std::begin(roles::kAllVariants),
                                          std::end(roles::kAllVariants)};

  std::string reviewer_model = "gpt-4o-2024-08-06";
  std::string meta_model = "gpt-4o-2024-08-06";
  std::string perturb_model = "gpt-4o-2024-08-06";
  double role_temperature = 0.0;
  double perturb_temperature = 0.0;
  int max_output_tokens = 4096;
  std::size_t max_prompt_chars = 0;

  std::string provider = "mock";
  std::string base_url;
  std::string api_key;  // never serialized
  std::optional<fs::path> mock_script;
  std::optional<fs::path> cache_dir;  // default <out>/cache

  int max_retries = 3;
  int base_delay_ms = 500;
  int max_delay_ms = 30000;
  double requests_per_minute = 0.0;
  int max_in_flight = 4;

  double alpha = 0.05;
  double margin_dim = 0.5;
  double margin_overall = 1.0;
  double margin_decision = 0.5;
  stats::MappingScheme decision_mapping = stats::MappingScheme::kSimple;
  std::size_t exact_threshold = stats::kDefaultExactThreshold;

  std::size_t eval_per_aspect = 100;
  std::size_t eval_claims = 400;

  fs::path run_dir() const { return out / run_id; }
  fs::path resolved_cache_dir() const { return cache_dir ? *cache_dir : out / "cache"; }
};

/// Environment layer: RP_PROVIDER, RP_API_KEY, RP_BASE_URL.
void apply_environment(PipelineConfig& config);

/// File layer. Unknown keys are a kConfigError.
void apply_document(PipelineConfig& config, const std::map<std::string, Value>& doc);

/// Resolved configuration as recorded in the run manifest.
nlohmann::ordered_json to_json(const PipelineConfig& config);

/// Fresh id of the form run-YYYYMMDDTHHMMSSZ-xxxx.
std::string new_run_id();

}  // namespace rp::config
