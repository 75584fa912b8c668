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
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/aspect.hpp"
#include "rp/corpus.hpp"
#include "rp/taxonomy.hpp"

namespace rp::llm {
class Gateway;
}

namespace rp::perturb {

namespace fs = std::filesystem;

// Span location -------------------------------------------------------------

/// Half-open byte range into the original document.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const Span&) const = default;
};

/// Start anchors seen more often than this are rejected as ambiguous.
inline constexpr std::size_t kMaxStartOccurrences = 3;

/// Anchors compare case-sensitively after collapsing whitespace runs. Throws
/// kEmptyAnchor, kStartNotFound, kEndNotFound or kAmbiguousStart.
Span locate_span(std::string_view doc, std::string_view start_anchor,
                 std::string_view end_anchor);

enum class EditKind { kLlmEdit, kClaimInsert, kRatingFlip };

std::string_view to_string(EditKind kind);
EditKind parse_edit_kind(std::string_view s);

struct EditRecord {
  EditKind kind = EditKind::kLlmEdit;
  std::string target_doc;  // "paper/s<i>", "review/<id>", "rebuttal/<id>"
  std::string start_anchor;
  std::string end_anchor;
  std::string original;  // located span before the edit
  std::string replacement;
  bool applied = false;
  std::optional<std::string> failure_reason;
};

/// Throws the locate_span errors; doc is never modified in place.
std::string apply_edit(std::string_view doc, const EditRecord& edit);

/// Locates every edit against the unmodified document and splices them in
/// back to front. Edits that fail to locate or overlap an earlier-listed
/// edit are marked with a failure reason; `original` is filled for the rest.
std::string apply_edits(std::string_view doc, std::vector<EditRecord>& edits);

/// Edit blocks of the form
///   1.Text Span to Edit / -Start Words: / -Ending Words: / 2. Edited Text Span
/// Blocks missing an anchor or replacement are dropped.
std::vector<EditRecord> parse_edit_blocks(std::string_view response);

// False claims --------------------------------------------------------------

struct FalseClaim {
  std::string claim;
  std::string why_false;
  std::string why_weakness;
};

struct FalseClaimBucket {
  std::string paper_id;
  std::vector<FalseClaim> claims;
};

inline constexpr std::size_t kBucketSize = 5;
inline constexpr std::size_t kClaimsPerReview = 3;

/// Exactly five complete triples or kBucketParseError.
std::vector<FalseClaim> parse_false_claims(std::string_view response);

// Configuration -------------------------------------------------------------

struct PerturbConfig {
  std::string model_id = "mock-model";
  double temperature = 0.0;
  std::map<std::string, double> aspect_temperature;  // keyed by aspect name
  int max_output_tokens = 4096;
  int retries = 1;
  std::uint64_t seed = 0;
  taxonomy::TaxonomyRules rules;

  double temperature_for(const PerturbationAspect& aspect) const;
};

/// Defaults with the shipped taxonomy rules.
PerturbConfig default_config();

FalseClaimBucket build_false_claim_bucket(const corpus::PaperDocument& paper,
                                          llm::Gateway& gateway,
                                          const PerturbConfig& config,
                                          int* llm_calls = nullptr);

/// Appends three distinct claims, chosen by seed, as "- " bullets at the end
/// of the weaknesses. Returns the review and the chosen bucket indices.
std::pair<corpus::ReviewDocument, std::vector<std::size_t>> insert_false_claims(
    const corpus::ReviewDocument& review, const FalseClaimBucket& bucket,
    std::uint64_t seed);

// Conclusion flip -----------------------------------------------------------

struct FlipRules {
  std::vector<std::string> rating_labels;  // lines whose value is a rating
  std::vector<std::string> stances;        // rewritten to target_stance
  std::string target_stance;
};

/// data/flip_rules.json from the resource directory.
FlipRules default_flip_rules();
FlipRules load_flip_rules(const fs::path& path);

/// Rewrites every rating line to "1" and its verbal stances to the target
/// stance. Returns the review and one record per changed line.
std::pair<corpus::ReviewDocument, std::vector<EditRecord>> flip_conclusion(
    const corpus::ReviewDocument& review, const FlipRules& rules);

corpus::ReviewDocument flip_conclusion(const corpus::ReviewDocument& review);

// Bundle-level perturbation -------------------------------------------------

struct PerturbationLog {
  std::string bundle_id;
  PerturbationAspect aspect;
  std::vector<EditRecord> edits;
  int llm_call_count = 0;
  /// One triple of bucket indices per review; present only for review.factual.
  std::optional<std::vector<std::vector<std::size_t>>> inserted_claims;

  std::size_t applied_count() const;
};

struct PerturbResult {
  corpus::Bundle bundle;
  PerturbationLog log;
  std::optional<FalseClaimBucket> bucket;
};

/// The seven prompt-driven aspects. Throws kWrongAspect for the rule-based
/// ones and kAllEditsFailed when nothing could be applied.
PerturbResult perturb_with_llm(const corpus::Bundle& bundle,
                               const PerturbationAspect& aspect,
                               llm::Gateway& gateway,
                               const PerturbConfig& config);

/// Any of the nine aspects.
PerturbResult perturb_bundle(const corpus::Bundle& bundle,
                             const PerturbationAspect& aspect,
                             llm::Gateway& gateway, const PerturbConfig& config);

// Accounting ----------------------------------------------------------------

struct EditStats {
  std::size_t bundles = 0;
  std::size_t sum = 0;
  double mean = 0.0;
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Applied-edit counts per bundle, grouped by aspect name.
std::map<std::string, EditStats> summarize_perturbations(
    const std::vector<PerturbationLog>& logs);

struct ManifestRow {
  std::string mode;
  std::string aspect;
  std::string bundle_id;
  std::string before_excerpt;
  std::string after_excerpt;
  std::string verdict;
};

inline constexpr std::string_view kClaimAspect = "factual_claim";

/// per_aspect applied edits for every sampled aspect present in the logs
/// (all but review.conclusion) plus claim_sample bucket claims. Throws
/// kInsufficientSamples.
std::vector<ManifestRow> sample_for_manual_eval(
    const std::vector<PerturbationLog>& logs,
    const std::vector<FalseClaimBucket>& buckets, std::size_t per_aspect,
    std::size_t claim_sample, std::uint64_t seed);

std::string manifest_csv(const std::vector<ManifestRow>& rows);

// Serialization -------------------------------------------------------------

nlohmann::ordered_json to_json(const EditRecord& edit);
EditRecord edit_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const PerturbationLog& log);
PerturbationLog log_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const FalseClaimBucket& bucket);
FalseClaimBucket bucket_from_json(const nlohmann::json& j);

}  // namespace rp::perturb
