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

#include "rp/taxonomy.hpp"

#include <regex>

#include <nlohmann/json.hpp>

#include "rp/error.hpp"
#include "rp/fields.hpp"
#include "rp/io.hpp"
#include "rp/llm.hpp"
#include "rp/text.hpp"

namespace rp::taxonomy {

using nlohmann::json;

namespace {

std::optional<bool> optional_flag(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_boolean()) {
    throw Error(ErrorCode::kInvalidDocument,
                std::string("taxonomy flag '") + key + "' must be boolean");
  }
  return j[key].get<bool>();
}

bool rule_matches(const KeywordRule& rule, std::string_view normalized) {
  if (rule.match == MatchKind::kWhole) return normalized == rule.pattern;
  return normalized.find(rule.pattern) != std::string_view::npos;
}

}  // namespace

TaxonomyRules load_rules(const std::filesystem::path& path) {
  const json j = io::read_json(path);
  TaxonomyRules out;
  out.approximate = j.value("approximate", false);
  out.body_classification_prompt = j.value("body_classification_prompt", "");
  if (!j.contains("rules") || !j["rules"].is_array()) {
    throw Error(ErrorCode::kInvalidDocument,
                path.string() + ": expected a 'rules' array");
  }
  for (const auto& r : j["rules"]) {
    KeywordRule rule;
    rule.pattern = normalize_title(r.at("pattern").get<std::string>());
    const std::string match = r.value("match", "substring");
    if (match == "whole") {
      rule.match = MatchKind::kWhole;
    } else if (match != "substring") {
      throw Error(ErrorCode::kInvalidDocument,
                  path.string() + ": unknown match kind '" + match + "'");
    }
    rule.contribution = optional_flag(r, "contribution");
    rule.soundness = optional_flag(r, "soundness");
    if (rule.pattern.empty()) {
      throw Error(ErrorCode::kInvalidDocument, path.string() + ": empty pattern");
    }
    out.rules.push_back(std::move(rule));
  }
  if (j.contains("overrides")) {
    for (const auto& [title, rel] : j["overrides"].items()) {
      out.overrides[normalize_title(title)] = {
          rel.value("contribution", false), rel.value("soundness", false)};
    }
  }
  return out;
}

TaxonomyRules default_rules() {
  return load_rules(io::resource_dir() / "data" / "taxonomy_rules.json");
}

std::string normalize_title(std::string_view title) {
  std::string s;
  for (char c : title) {
    if (c == '*' || c == '`') continue;
    s.push_back(c);
  }
  s = text::collapse_whitespace(s);
  static const std::regex numbering(
      R"(^(?:[0-9]+(?:\.[0-9]+)*\.?|[A-Z](?:\.[0-9]+)+\.?|[A-Z]\.|[IVXLC]+\.)\s+)");
  s = std::regex_replace(s, numbering, "", std::regex_constants::format_first_only);
  while (!s.empty() && (s.back() == ':' || s.back() == '.')) s.pop_back();
  return text::to_lower(text::trim(s));
}

SectionRelevance classify_section(std::string_view title,
                                  const TaxonomyRules& rules) {
  const std::string key = normalize_title(title);
  if (auto it = rules.overrides.find(key); it != rules.overrides.end()) {
    return it->second;
  }
  std::optional<bool> contribution;
  std::optional<bool> soundness;
  for (const auto& rule : rules.rules) {
    if (contribution && soundness) break;
    if (!rule_matches(rule, key)) continue;
    if (!contribution && rule.contribution) contribution = rule.contribution;
    if (!soundness && rule.soundness) soundness = rule.soundness;
  }
  return {contribution.value_or(false), soundness.value_or(false)};
}

bool is_known_title(std::string_view title, const TaxonomyRules& rules) {
  const std::string key = normalize_title(title);
  if (rules.overrides.count(key)) return true;
  for (const auto& rule : rules.rules) {
    if (rule_matches(rule, key)) return true;
  }
  return false;
}

std::vector<std::size_t> select_target_sections(
    const corpus::PaperDocument& paper, const PerturbationAspect& aspect,
    const TaxonomyRules& rules) {
  if (aspect.mode != Mode::kPaper) {
    throw Error(ErrorCode::kWrongAspect,
                aspect.name() + " does not target paper sections");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < paper.sections.size(); ++i) {
    const auto& s = paper.sections[i];
    if (!s.has_body()) continue;
    bool take = false;
    switch (aspect.kind) {
      case AspectKind::kPresentation:
        take = true;
        break;
      case AspectKind::kContribution:
        take = classify_section(s.title, rules).contribution;
        break;
      case AspectKind::kSoundness:
        take = classify_section(s.title, rules).soundness;
        break;
      default:
        throw Error(ErrorCode::kWrongAspect, aspect.name());
    }
    if (take) out.push_back(i);
  }
  if (out.empty()) {
    throw Error(ErrorCode::kNoTargets,
                "paper '" + paper.paper_id + "' has no " + aspect.name() +
                    " sections");
  }
  return out;
}

PaperClassification classify_paper(const corpus::PaperDocument& paper,
                                   const TaxonomyRules& rules) {
  PaperClassification out;
  for (const auto& s : paper.sections) {
    out.relevance.push_back(classify_section(s.title, rules));
    if (!is_known_title(s.title, rules)) out.unmatched_titles.push_back(s.title);
  }
  return out;
}

SectionRelevance classify_section_body(const corpus::Section& section,
                                       const TaxonomyRules& rules,
                                       llm::Gateway& gateway,
                                       const std::string& model_id) {
  if (rules.body_classification_prompt.empty()) {
    throw Error(ErrorCode::kConfigError,
                "rules file has no body_classification_prompt");
  }
  llm::Request req;
  req.model_id = model_id;
  req.user_prompt = text::replace_all(rules.body_classification_prompt,
                                      "[Section here]", section.text());
  req.max_output_tokens = 64;
  req.request_tag = "taxonomy/" + normalize_title(section.title);
  const auto resp = gateway.complete(req);
  static const std::vector<fields::FieldSpec> specs = {
      {"contribution", {"Contribution"}}, {"soundness", {"Soundness"}}};
  const auto hits = fields::scan(resp.text, specs);
  auto flag = [&](std::size_t i) {
    auto hit = fields::first(hits, i);
    if (!hit) {
      throw Error(ErrorCode::kParseError,
                  "section label response lacks '" + specs[i].aliases[0] + "'");
    }
    const std::string v =
        text::to_lower(fields::scalar_value(resp.text, *hit));
    if (v.rfind("yes", 0) == 0) return true;
    if (v.rfind("no", 0) == 0) return false;
    throw Error(ErrorCode::kParseError, "expected yes/no, got '" + v + "'");
  };
  return {flag(0), flag(1)};
}

}  // namespace rp::taxonomy
