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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rp/aspect.hpp"
#include "rp/corpus.hpp"

namespace rp::llm {
class Gateway;
}

namespace rp::taxonomy {

struct SectionRelevance {
  bool contribution = false;
  bool soundness = false;

  bool operator==(const SectionRelevance&) const = default;
};

enum class MatchKind { kSubstring, kWhole };

/// A rule may speak to one flag or both; unset flags fall through to later
/// rules.
struct KeywordRule {
  std::string pattern;  // lower-case, compared against normalize_title()
  MatchKind match = MatchKind::kSubstring;
  std::optional<bool> contribution;
  std::optional<bool> soundness;
};

struct TaxonomyRules {
  std::vector<KeywordRule> rules;
  std::map<std::string, SectionRelevance> overrides;  // normalized title keys
  bool approximate = false;
  std::string body_classification_prompt;
};

TaxonomyRules load_rules(const std::filesystem::path& path);

/// data/taxonomy_rules.json from the resource directory.
TaxonomyRules default_rules();

/// Lower-cases, strips numbering ("3.1", "A.2", "IV."), emphasis markers and
/// trailing punctuation, and collapses whitespace.
std::string normalize_title(std::string_view title);

SectionRelevance classify_section(std::string_view title,
                                  const TaxonomyRules& rules);

/// True when an override or at least one rule matched the title.
bool is_known_title(std::string_view title, const TaxonomyRules& rules);

/// Indices of target sections for a paper-mode aspect, strictly increasing.
/// Throws kWrongAspect for non-paper aspects and kNoTargets when empty.
std::vector<std::size_t> select_target_sections(
    const corpus::PaperDocument& paper, const PerturbationAspect& aspect,
    const TaxonomyRules& rules);

struct PaperClassification {
  std::vector<SectionRelevance> relevance;  // one per section
  std::vector<std::string> unmatched_titles;
};

PaperClassification classify_paper(const corpus::PaperDocument& paper,
                                   const TaxonomyRules& rules);

/// Asks the model to label an unmatched section from its body text using
/// the rules file prompt. Off by default in the pipeline.
SectionRelevance classify_section_body(const corpus::Section& section,
                                       const TaxonomyRules& rules,
                                       llm::Gateway& gateway,
                                       const std::string& model_id);

}  // namespace rp::taxonomy
