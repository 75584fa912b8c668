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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/corpus.hpp"
#include "rp/llm.hpp"

namespace rp::roles {

enum class CotVariant { kNone, kDimension, kTemplate };

inline constexpr CotVariant kAllVariants[] = {
    CotVariant::kNone, CotVariant::kDimension, CotVariant::kTemplate};

std::string_view to_string(CotVariant v);
CotVariant parse_variant(std::string_view s);

enum class FinalDecision { kReject, kAcceptPoster, kAcceptSpotlight, kAcceptOral };

inline constexpr FinalDecision kAllDecisions[] = {
    FinalDecision::kReject, FinalDecision::kAcceptPoster,
    FinalDecision::kAcceptSpotlight, FinalDecision::kAcceptOral};

/// "reject", "accept_poster", "accept_spotlight", "accept_oral".
std::string_view to_string(FinalDecision d);
FinalDecision parse_decision_id(std::string_view s);

/// Free-text decision ("Accept as Spotlight", "Reject: ..."), nullopt when
/// the first clause names no category.
std::optional<FinalDecision> parse_decision_text(std::string_view text);

bool is_accept(FinalDecision d);

struct ReviewerOutput {
  std::string summary;
  std::string strengths;
  std::string weaknesses;
  int contribution_score = 0;
  int soundness_score = 0;
  int presentation_score = 0;
  int overall_rating = 0;
  std::string raw_text;
};

struct MetaReviewerOutput {
  CotVariant variant = CotVariant::kNone;
  std::optional<int> contribution_score;
  std::optional<int> soundness_score;
  std::optional<int> presentation_score;
  std::optional<std::string> metareview;
  std::optional<std::string> why_not_higher;
  std::optional<std::string> why_not_lower;
  int overall_score = 0;
  FinalDecision final_decision = FinalDecision::kReject;
  std::string raw_text;
};

// Templates -----------------------------------------------------------------

inline constexpr const char* kTemplateIds[] = {
    "reviewer",
    "meta_none",
    "meta_dimension",
    "meta_template",
    "perturb_paper_contribution",
    "perturb_paper_soundness",
    "perturb_paper_presentation",
    "perturb_review_tone",
    "false_claims",
    "perturb_rebuttal_tone",
    "perturb_rebuttal_presentation",
    "perturb_rebuttal_completeness",
};

/// prompts/<id>.txt from the resource directory; kUnknownTemplate otherwise.
std::string load_template(std::string_view template_id);

/// Names of "[... here]" placeholders in order of appearance.
std::vector<std::string> placeholders(std::string_view template_text);

/// Single-pass substitution of "[Name here]" tokens; bound text is never
/// rescanned. Throws kUnboundPlaceholder naming the first unbound token.
std::string render_text(std::string_view template_text,
                        const std::map<std::string, std::string>& bindings);

std::string render_prompt(std::string_view template_id,
                          const std::map<std::string, std::string>& bindings);

/// Replaces the illustrated "[Review 1 ...] ... [Rebuttal n ...]" region of
/// a meta-reviewer template with k numbered review/rebuttal blocks.
std::string expand_review_blocks(std::string_view template_text, std::size_t k);

struct RenderedPrompt {
  std::string text;
  std::size_t dropped_sections = 0;
};

/// Paper text without trailing newlines, keeping only the first `sections`
/// sections.
std::string paper_binding(const corpus::PaperDocument& paper,
                          std::size_t sections);

/// max_chars == 0 disables truncation. Otherwise sections are dropped from
/// the end of the paper until the prompt fits (at least one is kept).
RenderedPrompt render_reviewer_prompt(const corpus::PaperDocument& paper,
                                      std::size_t max_chars = 0);
RenderedPrompt render_meta_prompt(const corpus::Bundle& bundle,
                                  CotVariant variant, std::size_t max_chars = 0);

// Parsing -------------------------------------------------------------------

/// Throws kParseError listing every missing or invalid field.
ReviewerOutput parse_reviewer_output(std::string_view text);
MetaReviewerOutput parse_meta_output(std::string_view text, CotVariant variant);

/// Text appended to the prompt on the single format retry.
std::string format_reminder(std::optional<CotVariant> meta_variant);

// Running -------------------------------------------------------------------

struct RoleConfig {
  std::string model_id = "mock-model";
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::size_t max_prompt_chars = 0;
  bool allow_truncated = false;
  int parse_retries = 1;
};

struct RunInfo {
  int attempts = 0;
  std::size_t dropped_sections = 0;
  std::vector<std::string> request_digests;
};

ReviewerOutput run_reviewer(const corpus::PaperDocument& paper,
                            llm::Gateway& gateway, const RoleConfig& config,
                            const std::string& tag, RunInfo* info = nullptr);

MetaReviewerOutput run_meta_reviewer(const corpus::Bundle& bundle,
                                     CotVariant variant, llm::Gateway& gateway,
                                     const RoleConfig& config,
                                     const std::string& tag,
                                     RunInfo* info = nullptr);

nlohmann::ordered_json to_json(const ReviewerOutput& out);
nlohmann::ordered_json to_json(const MetaReviewerOutput& out);
ReviewerOutput reviewer_from_json(const nlohmann::json& j);
MetaReviewerOutput meta_from_json(const nlohmann::json& j);

}  // namespace rp::roles
