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

#include "rp/aspect.hpp"

#include <algorithm>

#include "rp/error.hpp"
#include "rp/text.hpp"

namespace rp {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kPaper: return "paper";
    case Mode::kReview: return "review";
    case Mode::kRebuttal: return "rebuttal";
  }
  return "paper";
}

std::string_view to_string(AspectKind kind) {
  switch (kind) {
    case AspectKind::kContribution: return "contribution";
    case AspectKind::kSoundness: return "soundness";
    case AspectKind::kPresentation: return "presentation";
    case AspectKind::kTone: return "tone";
    case AspectKind::kFactual: return "factual";
    case AspectKind::kConclusion: return "conclusion";
    case AspectKind::kCompleteness: return "completeness";
  }
  return "contribution";
}

std::string PerturbationAspect::name() const {
  return std::string(to_string(mode)) + "." + std::string(to_string(kind));
}

bool PerturbationAspect::llm_driven() const {
  return !(mode == Mode::kReview &&
           (kind == AspectKind::kFactual || kind == AspectKind::kConclusion));
}

bool is_valid(const PerturbationAspect& aspect) {
  return std::find(kAllAspects.begin(), kAllAspects.end(), aspect) !=
         kAllAspects.end();
}

PerturbationAspect parse_aspect(std::string_view text) {
  const std::string wanted = text::to_lower(text::trim(text));
  for (const auto& a : kAllAspects) {
    if (a.name() == wanted) return a;
  }
  throw Error(ErrorCode::kWrongAspect,
              "unknown aspect '" + std::string(text) +
                  "' (expected mode.aspect, e.g. paper.soundness)");
}

}  // namespace rp
