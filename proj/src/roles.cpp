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

#include "rp/roles.hpp"

#include <regex>

#include "rp/error.hpp"
#include "rp/fields.hpp"
#include "rp/io.hpp"
#include "rp/text.hpp"

namespace rp::roles {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(CotVariant v) {
  switch (v) {
    case CotVariant::kNone: return "none";
    case CotVariant::kDimension: return "dimension";
    case CotVariant::kTemplate: return "template";
  }
  return "none";
}

CotVariant parse_variant(std::string_view s) {
  const auto v = text::to_lower(text::trim(s));
  if (v == "none") return CotVariant::kNone;
  if (v == "dimension") return CotVariant::kDimension;
  if (v == "template") return CotVariant::kTemplate;
  throw Error(ErrorCode::kConfigError,
              "unknown CoT variant '" + std::string(s) +
                  "' (expected none, dimension or template)");
}

std::string_view to_string(FinalDecision d) {
  switch (d) {
    case FinalDecision::kReject: return "reject";
    case FinalDecision::kAcceptPoster: return "accept_poster";
    case FinalDecision::kAcceptSpotlight: return "accept_spotlight";
    case FinalDecision::kAcceptOral: return "accept_oral";
  }
  return "reject";
}

FinalDecision parse_decision_id(std::string_view s) {
  for (auto d : kAllDecisions) {
    if (to_string(d) == s) return d;
  }
  throw Error(ErrorCode::kUnknownCategory, "decision '" + std::string(s) + "'");
}

std::optional<FinalDecision> parse_decision_text(std::string_view value) {
  std::string v = text::to_lower(value);
  v.erase(std::remove_if(v.begin(), v.end(),
                         [](char c) { return c == '*' || c == '_' || c == '`'; }),
          v.end());
  const std::string clause(text::trim(v.substr(0, v.find_first_of(".,;:\n"))));
  if (clause.rfind("reject", 0) == 0) return FinalDecision::kReject;
  if (clause.find("oral") != std::string::npos) return FinalDecision::kAcceptOral;
  if (clause.find("spotlight") != std::string::npos) return FinalDecision::kAcceptSpotlight;
  if (clause.find("poster") != std::string::npos) return FinalDecision::kAcceptPoster;
  if (clause.find("reject") != std::string::npos) return FinalDecision::kReject;
  return std::nullopt;
}

bool is_accept(FinalDecision d) { return d != FinalDecision::kReject; }

// Templates -----------------------------------------------------------------

std::string load_template(std::string_view template_id) {
  bool known = false;
  for (const char* id : kTemplateIds) known = known || template_id == id;
  if (!known) {
    throw Error(ErrorCode::kUnknownTemplate,
                "no prompt template '" + std::string(template_id) + "'");
  }
  const auto path =
      io::resource_dir() / "prompts" / (std::string(template_id) + ".txt");
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kUnknownTemplate, "missing " + path.string());
  }
  return io::read_file(path);
}

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(\[([^\[\]\n]+?) here\])");
  return re;
}

}  // namespace

std::vector<std::string> placeholders(std::string_view template_text) {
  std::vector<std::string> out;
  const std::string s(template_text);
  for (std::sregex_iterator it(s.begin(), s.end(), placeholder_re()), end;
       it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string render_text(std::string_view template_text,
                        const std::map<std::string, std::string>& bindings) {
  const std::string s(template_text);
  std::string out;
  out.reserve(s.size());
  std::size_t last = 0;
  for (std::sregex_iterator it(s.begin(), s.end(), placeholder_re()), end;
       it != end; ++it) {
    const auto& m = *it;
    const auto found = bindings.find(m[1].str());
    if (found == bindings.end()) {
      throw Error(ErrorCode::kUnboundPlaceholder,
                  "no binding for [" + m[1].str() + " here]");
    }
    out.append(s, last, static_cast<std::size_t>(m.position(0)) - last);
    out += found->second;
    last = static_cast<std::size_t>(m.position(0) + m.length(0));
  }
  out.append(s, last, std::string::npos);
  return out;
}

std::string render_prompt(std::string_view template_id,
                          const std::map<std::string, std::string>& bindings) {
  return render_text(load_template(template_id), bindings);
}

std::string expand_review_blocks(std::string_view t, std::size_t k) {
  const std::string_view first = "[Review 1 Content here]";
  const std::string_view last = "[Rebuttal n Content here]";
  const auto a = t.find(first);
  const auto b = t.find(last);
  if (a == std::string_view::npos || b == std::string_view::npos || b < a) {
    return std::string(t);
  }
  const std::size_t end = b + last.size();
  const std::string_view region = t.substr(a, end - a);
  const auto dots = region.find("...\n");
  const std::string_view n_block =
      dots == std::string_view::npos ? region : region.substr(dots + 4);

  std::string blocks;
  for (std::size_t i = 1; i <= k; ++i) {
    if (i > 1) blocks += "\n\n";
    const std::string idx = std::to_string(i);
    std::string block = text::replace_all(n_block, "Review n ", "Review " + idx + " ");
    block = text::replace_all(block, "Rebuttal n ", "Rebuttal " + idx + " ");
    blocks += block;
  }
  return std::string(t.substr(0, a)) + blocks + std::string(t.substr(end));
}

std::string paper_binding(const corpus::PaperDocument& paper, std::size_t sections) {
  std::string s = paper.preamble;
  for (std::size_t i = 0; i < std::min(sections, paper.sections.size()); ++i) {
    s += paper.sections[i].text();
  }
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

namespace {

template <typename Render>
RenderedPrompt fit_sections(const corpus::PaperDocument& paper,
                            std::size_t max_chars, Render render) {
  std::size_t keep = paper.sections.size();
  std::string prompt = render(paper_binding(paper, keep));
  while (max_chars > 0 && prompt.size() > max_chars && keep > 1) {
    --keep;
    prompt = render(paper_binding(paper, keep));
  }
  return {std::move(prompt), paper.sections.size() - keep};
}

std::string without_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

RenderedPrompt render_reviewer_prompt(const corpus::PaperDocument& paper,
                                      std::size_t max_chars) {
  const std::string tmpl = load_template("reviewer");
  return fit_sections(paper, max_chars, [&](const std::string& body) {
    return render_text(tmpl, {{"Paper Content", body}});
  });
}

RenderedPrompt render_meta_prompt(const corpus::Bundle& bundle,
                                  CotVariant variant, std::size_t max_chars) {
  const std::string id = "meta_" + std::string(to_string(variant));
  const std::string tmpl =
      expand_review_blocks(load_template(id), bundle.reviews.size());
  std::map<std::string, std::string> bindings;
  for (std::size_t i = 0; i < bundle.reviews.size(); ++i) {
    const auto& review = bundle.reviews[i];
    const std::string n = std::to_string(i + 1);
    bindings["Review " + n + " Content"] = without_trailing_newlines(review.raw_text);
    const auto* rebuttal = bundle.rebuttal_for(review.review_id);
    bindings["Rebuttal " + n + " Content"] =
        rebuttal ? without_trailing_newlines(rebuttal->body) : "(no rebuttal)";
  }
  return fit_sections(bundle.paper, max_chars, [&](const std::string& body) {
    auto b = bindings;
    b["Paper Content"] = body;
    return render_text(tmpl, b);
  });
}

// Parsing -------------------------------------------------------------------

namespace {

struct Problems {
  std::vector<std::string> items;
  void add(std::string s) { items.push_back(std::move(s)); }
  void raise_if_any(std::string_view what) const {
    if (items.empty()) return;
    std::string msg = std::string(what) + ": ";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) msg += "; ";
      msg += items[i];
    }
    throw Error(ErrorCode::kParseError, msg);
  }
};

std::optional<int> score_field(std::string_view text,
                               const std::vector<fields::FieldHit>& hits,
                               std::size_t index, std::string_view name, int lo,
                               int hi, Problems& problems) {
  const auto hit = fields::first(hits, index);
  if (!hit) {
    problems.add("missing " + std::string(name));
    return std::nullopt;
  }
  const auto raw = fields::scalar_value(text, *hit);
  const auto value = fields::parse_leading_int(raw);
  if (!value) {
    problems.add(std::string(name) + " is not an integer ('" + std::string(raw) + "')");
    return std::nullopt;
  }
  if (*value < lo || *value > hi) {
    problems.add(std::string(name) + " " + std::to_string(*value) + " outside [" +
                 std::to_string(lo) + "," + std::to_string(hi) + "]");
    return std::nullopt;
  }
  return value;
}

std::string block_field(std::string_view text,
                        const std::vector<fields::FieldHit>& hits,
                        std::size_t index) {
  const auto hit = fields::first(hits, index);
  return hit ? std::string(fields::block_value(text, *hit)) : std::string();
}

enum ReviewerField : std::size_t {
  kRSummary, kRStrengths, kRWeaknesses, kRContribution, kRSoundness,
  kRPresentation, kRRating,
};

const std::vector<fields::FieldSpec>& reviewer_specs() {
  static const std::vector<fields::FieldSpec> specs = {
      {"summary", {"Summary"}},
      {"strengths", {"Strengths", "Strength"}},
      {"weaknesses", {"Weaknesses", "Weakness"}},
      {"contribution", {"Contribution"}},
      {"soundness", {"Soundness"}},
      {"presentation", {"Presentation"}},
      {"rating", {"Rating", "Overall Score", "Overall Rating"}},
  };
  return specs;
}

enum MetaField : std::size_t {
  kMOverall, kMDecision, kMContribution, kMSoundness, kMPresentation,
  kMMetareview, kMWhyNotHigher, kMWhyNotLower,
};

const std::vector<fields::FieldSpec>& meta_specs() {
  static const std::vector<fields::FieldSpec> specs = {
      {"overall", {"Overall Score", "Overall Rating", "Rating", "Score"}},
      {"decision", {"Final Decision", "Decision"}},
      {"contribution", {"Contribution"}},
      {"soundness", {"Soundness"}},
      {"presentation", {"Presentation"}},
      {"metareview", {"Metareview", "Meta-review", "Meta Review"}},
      {"why_not_higher", {"Justification For Why Not Higher Score"}},
      {"why_not_lower", {"Justification For Why Not Lower Score"}},
  };
  return specs;
}

}  // namespace

ReviewerOutput parse_reviewer_output(std::string_view text) {
  const auto hits = fields::scan(text, reviewer_specs());
  Problems problems;
  ReviewerOutput out;
  out.raw_text = std::string(text);
  out.summary = block_field(text, hits, kRSummary);
  out.strengths = block_field(text, hits, kRStrengths);
  out.weaknesses = block_field(text, hits, kRWeaknesses);
  auto c = score_field(text, hits, kRContribution, "contribution", 1, 4, problems);
  auto s = score_field(text, hits, kRSoundness, "soundness", 1, 4, problems);
  auto p = score_field(text, hits, kRPresentation, "presentation", 1, 4, problems);
  auto r = score_field(text, hits, kRRating, "rating", 1, 10, problems);
  problems.raise_if_any("reviewer output");
  out.contribution_score = *c;
  out.soundness_score = *s;
  out.presentation_score = *p;
  out.overall_rating = *r;
  return out;
}

MetaReviewerOutput parse_meta_output(std::string_view text, CotVariant variant) {
  const auto hits = fields::scan(text, meta_specs());
  Problems problems;
  MetaReviewerOutput out;
  out.variant = variant;
  out.raw_text = std::string(text);
  auto overall = score_field(text, hits, kMOverall, "overall score", 1, 10, problems);
  std::optional<FinalDecision> decision;
  if (auto hit = fields::first(hits, kMDecision)) {
    const auto raw = fields::scalar_value(text, *hit);
    decision = parse_decision_text(raw);
    if (!decision) problems.add("unrecognised final decision '" + std::string(raw) + "'");
  } else {
    problems.add("missing final decision");
  }
  if (variant == CotVariant::kDimension) {
    out.contribution_score =
        score_field(text, hits, kMContribution, "contribution", 1, 4, problems);
    out.soundness_score = score_field(text, hits, kMSoundness, "soundness", 1, 4, problems);
    out.presentation_score =
        score_field(text, hits, kMPresentation, "presentation", 1, 4, problems);
  }
  if (variant == CotVariant::kTemplate) {
    for (auto [index, name, slot] :
         {std::tuple{kMWhyNotHigher, "justification for why not higher score",
                     &out.why_not_higher},
          std::tuple{kMWhyNotLower, "justification for why not lower score",
                     &out.why_not_lower}}) {
      const std::string value = block_field(text, hits, index);
      if (value.empty()) {
        problems.add(std::string("missing ") + name);
      } else {
        *slot = value;
      }
    }
    if (auto hit = fields::first(hits, kMMetareview)) {
      out.metareview = std::string(fields::block_value(text, *hit));
    }
  }
  problems.raise_if_any("meta-reviewer output");
  out.overall_score = *overall;
  out.final_decision = *decision;
  return out;
}

std::string format_reminder(std::optional<CotVariant> meta_variant) {
  std::string s =
      "\n\nPlease follow the output format exactly. Your answer must contain "
      "these labelled lines, each followed by a single integer or choice:\n";
  if (!meta_variant) {
    s += "Contribution: <1-4>\nSoundness: <1-4>\nPresentation: <1-4>\nRating: <1-10>\n";
    return s;
  }
  if (*meta_variant == CotVariant::kDimension) {
    s += "Contribution: <1-4>\nSoundness: <1-4>\nPresentation: <1-4>\n";
  }
  if (*meta_variant == CotVariant::kTemplate) {
    s += "Metareview: <text>\nJustification For Why Not Higher Score: <text>\n"
         "Justification For Why Not Lower Score: <text>\n";
  }
  s += "Overall Score: <1-10>\n"
       "Final Decision: <Reject | Accept as Poster | Accept as Spotlight | "
       "Accept as Oral>\n";
  return s;
}

// Running -------------------------------------------------------------------

namespace {

template <typename Parse>
auto run_with_retry(const std::string& prompt, const std::string& reminder,
                    llm::Gateway& gateway, const RoleConfig& config,
                    const std::string& tag, RunInfo& info, Parse parse)
    -> decltype(parse(std::string_view{})) {
  llm::Request req;
  req.model_id = config.model_id;
  req.temperature = config.temperature;
  req.max_output_tokens = config.max_output_tokens;
  req.user_prompt = prompt;
  req.request_tag = tag;
  for (int attempt = 0;; ++attempt) {
    ++info.attempts;
    info.request_digests.push_back(llm::digest(req));
    const auto resp = gateway.complete(req);
    llm::require_usable(resp, config.allow_truncated);
    try {
      return parse(resp.text);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kParseError || attempt >= config.parse_retries) throw;
    }
    req.user_prompt = prompt + reminder;
    req.request_tag = tag + "/retry";
  }
}

}  // namespace

ReviewerOutput run_reviewer(const corpus::PaperDocument& paper,
                            llm::Gateway& gateway, const RoleConfig& config,
                            const std::string& tag, RunInfo* info) {
  RunInfo local;
  RunInfo& i = info ? *info : local;
  const auto rendered = render_reviewer_prompt(paper, config.max_prompt_chars);
  i.dropped_sections = rendered.dropped_sections;
  return run_with_retry(rendered.text, format_reminder(std::nullopt), gateway,
                        config, tag, i,
                        [](std::string_view t) { return parse_reviewer_output(t); });
}

MetaReviewerOutput run_meta_reviewer(const corpus::Bundle& bundle,
                                     CotVariant variant, llm::Gateway& gateway,
                                     const RoleConfig& config,
                                     const std::string& tag, RunInfo* info) {
  RunInfo local;
  RunInfo& i = info ? *info : local;
  const auto rendered = render_meta_prompt(bundle, variant, config.max_prompt_chars);
  i.dropped_sections = rendered.dropped_sections;
  return run_with_retry(
      rendered.text, format_reminder(variant), gateway, config, tag, i,
      [variant](std::string_view t) { return parse_meta_output(t, variant); });
}

// JSON ----------------------------------------------------------------------

ordered_json to_json(const ReviewerOutput& o) {
  ordered_json j;
  j["summary"] = o.summary;
  j["strengths"] = o.strengths;
  j["weaknesses"] = o.weaknesses;
  j["contribution_score"] = o.contribution_score;
  j["soundness_score"] = o.soundness_score;
  j["presentation_score"] = o.presentation_score;
  j["overall_rating"] = o.overall_rating;
  j["raw_text"] = o.raw_text;
  return j;
}

ordered_json to_json(const MetaReviewerOutput& o) {
  auto opt = [](const auto& v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["variant"] = std::string(to_string(o.variant));
  j["contribution_score"] = opt(o.contribution_score);
  j["soundness_score"] = opt(o.soundness_score);
  j["presentation_score"] = opt(o.presentation_score);
  j["metareview"] = opt(o.metareview);
  j["why_not_higher"] = opt(o.why_not_higher);
  j["why_not_lower"] = opt(o.why_not_lower);
  j["overall_score"] = o.overall_score;
  j["final_decision"] = std::string(to_string(o.final_decision));
  j["raw_text"] = o.raw_text;
  return j;
}

ReviewerOutput reviewer_from_json(const json& j) {
  ReviewerOutput o;
  o.summary = j.at("summary").get<std::string>();
  o.strengths = j.at("strengths").get<std::string>();
  o.weaknesses = j.at("weaknesses").get<std::string>();
  o.contribution_score = j.at("contribution_score").get<int>();
  o.soundness_score = j.at("soundness_score").get<int>();
  o.presentation_score = j.at("presentation_score").get<int>();
  o.overall_rating = j.at("overall_rating").get<int>();
  o.raw_text = j.at("raw_text").get<std::string>();
  return o;
}

MetaReviewerOutput meta_from_json(const json& j) {
  auto opt_int = [&](const char* k) -> std::optional<int> {
    return j.contains(k) && !j[k].is_null() ? std::optional<int>(j[k].get<int>())
                                            : std::nullopt;
  };
  auto opt_str = [&](const char* k) -> std::optional<std::string> {
    return j.contains(k) && !j[k].is_null()
               ? std::optional<std::string>(j[k].get<std::string>())
               : std::nullopt;
  };
  MetaReviewerOutput o;
  o.variant = parse_variant(j.at("variant").get<std::string>());
  o.contribution_score = opt_int("contribution_score");
  o.soundness_score = opt_int("soundness_score");
  o.presentation_score = opt_int("presentation_score");
  o.metareview = opt_str("metareview");
  o.why_not_higher = opt_str("why_not_higher");
  o.why_not_lower = opt_str("why_not_lower");
  o.overall_score = j.at("overall_score").get<int>();
  o.final_decision = parse_decision_id(j.at("final_decision").get<std::string>());
  o.raw_text = j.at("raw_text").get<std::string>();
  return o;
}

}  // namespace rp::roles
