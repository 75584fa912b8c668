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

#include <array>
#include <string>
#include <string_view>

namespace rp {

enum class Mode { kPaper, kReview, kRebuttal };

enum class AspectKind {
  kContribution,
  kSoundness,
  kPresentation,
  kTone,
  kFactual,
  kConclusion,
  kCompleteness,
};

/// One (mode, aspect) entry of the nine-way perturbation taxonomy.
struct PerturbationAspect {
  Mode mode = Mode::kPaper;
  AspectKind kind = AspectKind::kContribution;

  /// "paper.contribution", "review.tone", ...
  std::string name() const;

  /// False for the two rule-based review operators (factual, conclusion).
  bool llm_driven() const;

  bool operator==(const PerturbationAspect&) const = default;
};

std::string_view to_string(Mode mode);
std::string_view to_string(AspectKind kind);

inline constexpr std::array<PerturbationAspect, 9> kAllAspects = {{
    {Mode::kPaper, AspectKind::kContribution},
    {Mode::kPaper, AspectKind::kSoundness},
    {Mode::kPaper, AspectKind::kPresentation},
    {Mode::kReview, AspectKind::kTone},
    {Mode::kReview, AspectKind::kFactual},
    {Mode::kReview, AspectKind::kConclusion},
    {Mode::kRebuttal, AspectKind::kTone},
    {Mode::kRebuttal, AspectKind::kPresentation},
    {Mode::kRebuttal, AspectKind::kCompleteness},
}};

/// Parses "mode.aspect"; throws kWrongAspect for pairs outside the taxonomy.
PerturbationAspect parse_aspect(std::string_view text);

bool is_valid(const PerturbationAspect& aspect);

}  // namespace rp
