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

#include "rp/perturb.hpp"

#include <algorithm>
#include <regex>

#include "rp/error.hpp"
#include "rp/fields.hpp"
#include "rp/io.hpp"
#include "rp/llm.hpp"
#include "rp/rng.hpp"
#include "rp/roles.hpp"
#include "rp/text.hpp"

namespace rp::perturb {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Normalized {
  std::string text;
  std::vector<std::size_t> origin;  // byte offset in the source per char
};

Normalized normalize_ws(std::string_view s) {
  Normalized n;
  n.text.reserve(s.size());
  n.origin.reserve(s.size());
  bool in_space = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (text::is_space(s[i])) {
      if (!in_space) {
        n.text.push_back(' ');
        n.origin.push_back(i);
      }
      in_space = true;
    } else {
      n.text.push_back(s[i]);
      n.origin.push_back(i);
      in_space = false;
    }
  }
  return n;
}

std::string normalize_anchor(std::string_view anchor) {
  return text::collapse_whitespace(text::trim(anchor));
}

}  // namespace

Span locate_span(std::string_view doc, std::string_view start_anchor,
                 std::string_view end_anchor) {
  const std::string start = normalize_anchor(start_anchor);
  const std::string end = normalize_anchor(end_anchor);
  if (start.empty() || end.empty()) {
    throw Error(ErrorCode::kEmptyAnchor, "edit anchors must be non-empty");
  }
  const Normalized n = normalize_ws(doc);

  std::vector<std::size_t> starts;
  for (auto pos = n.text.find(start); pos != std::string::npos;
       pos = n.text.find(start, pos + 1)) {
    starts.push_back(pos);
  }
  if (starts.empty()) {
    throw Error(ErrorCode::kStartNotFound, "start words '" + start + "' not found");
  }
  if (starts.size() > kMaxStartOccurrences) {
    throw Error(ErrorCode::kAmbiguousStart,
                "start words '" + start + "' occur " + std::to_string(starts.size()) +
                    " times");
  }
  for (std::size_t s : starts) {
    const auto e = n.text.find(end, s);
    if (e == std::string::npos) continue;
    return {n.origin[s], n.origin[e + end.size() - 1] + 1};
  }
  throw Error(ErrorCode::kEndNotFound,
              "ending words '" + end + "' not found after '" + start + "'");
}

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::kLlmEdit: return "llm_edit";
    case EditKind::kClaimInsert: return "claim_insert";
    case EditKind::kRatingFlip: return "rating_flip";
  }
  return "llm_edit";
}

EditKind parse_edit_kind(std::string_view s) {
  for (auto k : {EditKind::kLlmEdit, EditKind::kClaimInsert, EditKind::kRatingFlip}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::kUnknownCategory, "edit kind '" + std::string(s) + "'");
}

std::string apply_edit(std::string_view doc, const EditRecord& edit) {
  const Span span = locate_span(doc, edit.start_anchor, edit.end_anchor);
  std::string out(doc.substr(0, span.begin));
  out += edit.replacement;
  out += doc.substr(span.end);
  return out;
}

std::string apply_edits(std::string_view doc, std::vector<EditRecord>& edits) {
  std::vector<std::pair<Span, std::size_t>> accepted;
  for (std::size_t i = 0; i < edits.size(); ++i) {
    auto& edit = edits[i];
    edit.applied = false;
    Span span;
    try {
      span = locate_span(doc, edit.start_anchor, edit.end_anchor);
    } catch (const Error& e) {
      edit.failure_reason = e.what();
      continue;
    }
    const bool overlaps = std::any_of(
        accepted.begin(), accepted.end(), [&](const auto& a) {
          return span.begin < a.first.end && a.first.begin < span.end;
        });
    if (overlaps) {
      edit.failure_reason = "span overlaps an earlier edit";
      continue;
    }
    edit.original = std::string(doc.substr(span.begin, span.end - span.begin));
    edit.failure_reason.reset();
    accepted.emplace_back(span, i);
  }
  std::sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) {
    return a.first.begin > b.first.begin;
  });
  std::string out(doc);
  for (const auto& [span, i] : accepted) {
    out.replace(span.begin, span.end - span.begin, edits[i].replacement);
    edits[i].applied = true;
  }
  return out;
}

// Edit-block parsing --------------------------------------------------------

namespace {

enum class Label { kNone, kSpanHeader, kStart, kEnd, kEdited };

// Strips list markers and numbering and reports which template label, if
// any, opens the line. `rest` receives the text after the label's colon.
Label classify_line(std::string_view line, std::string& rest) {
  static const std::regex re(
      R"(^[\s\-\*#>\d\.\)]*(text span to edit|start words|starting words|ending words|end words|edited text span|edited span)\b[\s\*]*:?[\s\*]*(.*)$)",
      std::regex::icase);
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_match(line.begin(), line.end(), m, re)) return Label::kNone;
  rest = m[2].str();
  const std::string label = text::to_lower(m[1].str());
  if (label == "text span to edit") return Label::kSpanHeader;
  if (label.rfind("start", 0) == 0) return Label::kStart;
  if (label.rfind("end", 0) == 0) return Label::kEnd;
  return Label::kEdited;
}

std::string clean_anchor(std::string_view raw) {
  std::string s(text::trim(raw));
  static const std::vector<std::string> wrappers = {
      "\"", "'", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99",
      "...", "\xE2\x80\xA6", "`"};
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    for (const auto& w : wrappers) {
      if (s.size() >= w.size() && s.compare(0, w.size(), w) == 0) {
        s.erase(0, w.size());
        changed = true;
      }
      if (s.size() >= w.size() && s.compare(s.size() - w.size(), w.size(), w) == 0) {
        s.erase(s.size() - w.size());
        changed = true;
      }
    }
    s = std::string(text::trim(s));
  }
  return s;
}

struct PendingEdit {
  std::optional<std::string> start;
  std::optional<std::string> end;
  std::optional<std::vector<std::string>> replacement;
};

void flush(PendingEdit& p, std::vector<EditRecord>& out) {
  if (p.start && p.end && p.replacement && !p.start->empty() && !p.end->empty()) {
    auto& lines = *p.replacement;
    while (!lines.empty() && text::trim(lines.back()).empty()) lines.pop_back();
    std::size_t first = 0;
    while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
    std::string repl;
    for (std::size_t i = first; i < lines.size(); ++i) {
      if (i > first) repl += '\n';
      repl += lines[i];
    }
    EditRecord e;
    e.start_anchor = *p.start;
    e.end_anchor = *p.end;
    e.replacement = std::string(text::trim(repl));
    out.push_back(std::move(e));
  }
  p = {};
}

}  // namespace

std::vector<EditRecord> parse_edit_blocks(std::string_view response) {
  std::vector<EditRecord> out;
  PendingEdit p;
  Label awaiting = Label::kNone;
  const std::string normalized = text::normalize_newlines(response);
  for (auto raw : text::split_lines(normalized)) {
    std::string rest;
    const Label label = classify_line(raw, rest);
    if (label == Label::kSpanHeader) {
      flush(p, out);
      awaiting = Label::kNone;
      continue;
    }
    if (label == Label::kStart || label == Label::kEnd) {
      if (p.replacement || (label == Label::kStart && p.start)) flush(p, out);
      auto& slot = label == Label::kStart ? p.start : p.end;
      slot = clean_anchor(rest);
      awaiting = slot->empty() ? label : Label::kNone;
      continue;
    }
    if (label == Label::kEdited) {
      p.replacement.emplace();
      if (!text::trim(rest).empty()) p.replacement->push_back(rest);
      awaiting = Label::kNone;
      continue;
    }
    if (p.replacement) {
      p.replacement->emplace_back(raw);
    } else if (awaiting != Label::kNone && !text::trim(raw).empty()) {
      (awaiting == Label::kStart ? p.start : p.end) = clean_anchor(raw);
      awaiting = Label::kNone;
    }
  }
  flush(p, out);
  return out;
}

// False claims --------------------------------------------------------------

std::vector<FalseClaim> parse_false_claims(std::string_view response) {
  static const std::vector<fields::FieldSpec> specs = {
      {"claim", {"False Claim"}},
      {"why_false", {"Why the claim is false"}},
      {"why_weakness", {"Why the claim is weakness", "Why the claim is a weakness"}},
  };
  const std::string text = text::normalize_newlines(response);
  std::vector<FalseClaim> claims;
  std::vector<std::string> problems;
  for (const auto& hit : fields::scan(text, specs)) {
    std::string value(fields::block_value(text, hit));
    value = text::collapse_whitespace(value);
    if (hit.spec_index == 0) {
      claims.push_back({value, "", ""});
      continue;
    }
    if (claims.empty()) {
      problems.push_back("explanation before the first claim");
      continue;
    }
    (hit.spec_index == 1 ? claims.back().why_false : claims.back().why_weakness) = value;
  }
  if (claims.size() != kBucketSize) {
    problems.push_back("expected " + std::to_string(kBucketSize) + " claims, found " +
                       std::to_string(claims.size()));
  }
  for (std::size_t i = 0; i < claims.size(); ++i) {
    const auto& c = claims[i];
    if (c.claim.empty() || c.why_false.empty() || c.why_weakness.empty()) {
      problems.push_back("claim " + std::to_string(i + 1) + " has an empty field");
    }
  }
  if (!problems.empty()) {
    std::string msg = "false-claim bucket: ";
    for (std::size_t i = 0; i < problems.size(); ++i) {
      if (i) msg += "; ";
      msg += problems[i];
    }
    throw Error(ErrorCode::kBucketParseError, msg);
  }
  return claims;
}

// Configuration -------------------------------------------------------------

double PerturbConfig::temperature_for(const PerturbationAspect& aspect) const {
  const auto it = aspect_temperature.find(aspect.name());
  return it == aspect_temperature.end() ? temperature : it->second;
}

PerturbConfig default_config() {
  PerturbConfig c;
  c.rules = taxonomy::default_rules();
  return c;
}

namespace {

constexpr std::string_view kTemplateReminder =
    "Follow the output template exactly. Use the labels shown in the template "
    "and do not add any other text.";

llm::Request make_request(const PerturbConfig& config, double temperature,
                          std::string prompt, std::string tag) {
  llm::Request req;
  req.model_id = config.model_id;
  req.temperature = temperature;
  req.max_output_tokens = config.max_output_tokens;
  req.user_prompt = std::move(prompt);
  req.request_tag = std::move(tag);
  return req;
}

// One call plus up to config.retries re-asks while parse() keeps failing.
// The re-ask carries a system reminder so it gets its own cache entry.
template <typename Parse>
auto ask(llm::Gateway& gateway, const PerturbConfig& config, llm::Request req,
         int& calls, Parse parse) -> decltype(parse(std::string_view{}, false)) {
  const std::string tag = req.request_tag;
  for (int attempt = 0;; ++attempt) {
    const auto resp = gateway.complete(req);
    ++calls;
    llm::require_usable(resp, false);
    auto parsed = parse(resp.text, attempt >= config.retries);
    if (parsed) return parsed;
    req.system_prompt = std::string(kTemplateReminder);
    req.request_tag = tag + "/retry";
  }
}

std::string strip_trailing_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

FalseClaimBucket build_false_claim_bucket(const corpus::PaperDocument& paper,
                                          llm::Gateway& gateway,
                                          const PerturbConfig& config,
                                          int* llm_calls) {
  const std::string prompt = roles::render_prompt(
      "false_claims",
      {{"Paper Content", roles::paper_binding(paper, paper.sections.size())}});
  int calls = 0;
  auto claims = ask(
      gateway, config,
      make_request(config, config.temperature, prompt, "bucket/" + paper.paper_id),
      calls,
      [](std::string_view text, bool last) -> std::optional<std::vector<FalseClaim>> {
        try {
          return parse_false_claims(text);
        } catch (const Error&) {
          if (last) throw;
          return std::nullopt;
        }
      });
  if (llm_calls) *llm_calls += calls;
  return {paper.paper_id, std::move(*claims)};
}

std::pair<corpus::ReviewDocument, std::vector<std::size_t>> insert_false_claims(
    const corpus::ReviewDocument& review, const FalseClaimBucket& bucket,
    std::uint64_t seed) {
  if (bucket.claims.size() < kClaimsPerReview) {
    throw Error(ErrorCode::kBucketTooSmall,
                "bucket for " + bucket.paper_id + " has " +
                    std::to_string(bucket.claims.size()) + " claims");
  }
  std::vector<std::size_t> order(bucket.claims.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SeededRng rng(seed);
  rng.partial_shuffle(order, kClaimsPerReview);
  order.resize(kClaimsPerReview);

  const auto parsed = corpus::parse_review_text(review.raw_text);
  std::string bullets;
  for (std::size_t idx : order) {
    bullets += "\n- " + text::collapse_whitespace(text::trim(bucket.claims[idx].claim));
  }
  corpus::ReviewDocument out = review;
  out.raw_text.insert(parsed.weaknesses_end, bullets);
  const auto after = corpus::parse_review_text(out.raw_text);
  if (after.summary != parsed.summary || after.strengths != parsed.strengths ||
      after.contribution_score != parsed.contribution_score ||
      after.soundness_score != parsed.soundness_score ||
      after.presentation_score != parsed.presentation_score ||
      after.overall_rating != parsed.overall_rating ||
      after.weaknesses.size() <= parsed.weaknesses.size()) {
    throw Error(ErrorCode::kInvalidDocument,
                "review " + review.review_id + " has no weaknesses field to extend");
  }
  out.weaknesses = after.weaknesses;
  return {std::move(out), std::move(order)};
}

// Conclusion flip -----------------------------------------------------------

FlipRules load_flip_rules(const fs::path& path) {
  const auto j = io::read_json(path);
  FlipRules r;
  r.rating_labels = j.at("rating_labels").get<std::vector<std::string>>();
  r.stances = j.at("stances").get<std::vector<std::string>>();
  r.target_stance = j.at("target_stance").get<std::string>();
  std::stable_sort(r.stances.begin(), r.stances.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return r;
}

FlipRules default_flip_rules() {
  static const FlipRules rules =
      load_flip_rules(io::resource_dir() / "data" / "flip_rules.json");
  return rules;
}

namespace {

std::string replace_stances(std::string_view value, const FlipRules& rules) {
  std::string out(value);
  for (const auto& stance : rules.stances) {
    const std::string needle = text::to_lower(stance);
    std::size_t pos = 0;
    while (true) {
      pos = text::to_lower(out).find(needle, pos);
      if (pos == std::string::npos) break;
      out.replace(pos, needle.size(), rules.target_stance);
      pos += rules.target_stance.size();
    }
  }
  return out;
}

}  // namespace

std::pair<corpus::ReviewDocument, std::vector<EditRecord>> flip_conclusion(
    const corpus::ReviewDocument& review, const FlipRules& rules) {
  std::vector<fields::FieldSpec> specs = {{"rating", rules.rating_labels}};
  const std::string& raw = review.raw_text;
  static const std::regex number(R"(^(\s*[\*_\[\(]*\s*)([0-9]+)(?![0-9.,][0-9]))");

  struct Change {
    std::size_t begin, end;
    std::string value;
  };
  std::vector<Change> changes;
  for (const auto& hit : fields::scan(raw, specs)) {
    const std::string_view value = fields::scalar_value(raw, hit);
    if (value.empty()) continue;
    const std::size_t begin = static_cast<std::size_t>(value.data() - raw.data());
    std::string rewritten(value);
    std::smatch m;
    if (std::regex_search(rewritten, m, number) && std::stoi(m[2].str()) >= 2) {
      rewritten.replace(static_cast<std::size_t>(m.position(2)), m.length(2), "1");
    }
    rewritten = replace_stances(rewritten, rules);
    if (rewritten != value) changes.push_back({begin, begin + value.size(), rewritten});
  }

  corpus::ReviewDocument out = review;
  std::vector<EditRecord> records;
  for (auto it = changes.rbegin(); it != changes.rend(); ++it) {
    EditRecord e;
    e.kind = EditKind::kRatingFlip;
    e.target_doc = "review/" + review.review_id;
    e.original = raw.substr(it->begin, it->end - it->begin);
    e.replacement = it->value;
    e.applied = true;
    out.raw_text.replace(it->begin, it->end - it->begin, it->value);
    records.insert(records.begin(), std::move(e));
  }
  out.overall_rating = 1;
  return {std::move(out), std::move(records)};
}

corpus::ReviewDocument flip_conclusion(const corpus::ReviewDocument& review) {
  return flip_conclusion(review, default_flip_rules()).first;
}

// Bundle-level perturbation -------------------------------------------------

std::size_t PerturbationLog::applied_count() const {
  return static_cast<std::size_t>(std::count_if(
      edits.begin(), edits.end(), [](const EditRecord& e) { return e.applied; }));
}

namespace {

std::string template_for(const PerturbationAspect& aspect) {
  return "perturb_" + std::string(to_string(aspect.mode)) + "_" +
         std::string(to_string(aspect.kind));
}

std::vector<EditRecord> request_edits(const std::string& prompt,
                                      const std::string& tag,
                                      const std::string& target,
                                      const PerturbationAspect& aspect,
                                      llm::Gateway& gateway,
                                      const PerturbConfig& config, int& calls) {
  auto edits = ask(gateway, config,
                   make_request(config, config.temperature_for(aspect), prompt, tag),
                   calls,
                   [](std::string_view text, bool last) -> std::optional<std::vector<EditRecord>> {
                     auto parsed = parse_edit_blocks(text);
                     if (parsed.empty() && !last) return std::nullopt;
                     return parsed;
                   });
  for (auto& e : *edits) e.target_doc = target;
  return std::move(*edits);
}

void append(std::vector<EditRecord>& into, std::vector<EditRecord>&& from) {
  into.insert(into.end(), std::make_move_iterator(from.begin()),
              std::make_move_iterator(from.end()));
}

void perturb_paper(PerturbResult& r, const PerturbationAspect& aspect,
                   llm::Gateway& gateway, const PerturbConfig& config) {
  auto& paper = r.bundle.paper;
  std::vector<std::size_t> targets;
  if (aspect.kind == AspectKind::kPresentation) {
    for (std::size_t i = 0; i < paper.sections.size(); ++i) {
      if (paper.sections[i].has_body()) targets.push_back(i);
    }
  } else {
    targets = taxonomy::select_target_sections(paper, aspect, config.rules);
  }
  const std::string tmpl = template_for(aspect);
  const std::string prefix = "perturb/" + aspect.name() + "/" + r.bundle.id();
  for (std::size_t i : targets) {
    auto& section = paper.sections[i];
    const std::string prompt = roles::render_prompt(
        tmpl, {{"Paper Content", strip_trailing_newlines(section.text())}});
    const std::string idx = "s" + std::to_string(i);
    auto edits = request_edits(prompt, prefix + "/" + idx, "paper/" + idx, aspect,
                               gateway, config, r.log.llm_call_count);
    section.body = apply_edits(section.body, edits);
    append(r.log.edits, std::move(edits));
  }
}

void perturb_reviews(PerturbResult& r, const PerturbationAspect& aspect,
                     llm::Gateway& gateway, const PerturbConfig& config) {
  const std::string tmpl = template_for(aspect);
  const std::string prefix = "perturb/" + aspect.name() + "/" + r.bundle.id();
  for (std::size_t i = 0; i < r.bundle.reviews.size(); ++i) {
    auto& review = r.bundle.reviews[i];
    const std::string prompt = roles::render_prompt(
        tmpl, {{"Review Content", strip_trailing_newlines(review.raw_text)}});
    auto edits = request_edits(prompt, prefix + "/r" + std::to_string(i + 1),
                               "review/" + review.review_id, aspect, gateway, config,
                               r.log.llm_call_count);
    const auto before = corpus::parse_review_text(review.raw_text);
    corpus::ReviewDocument edited = review;
    edited.raw_text = apply_edits(review.raw_text, edits);
    bool intact = false;
    try {
      const auto after = corpus::parse_review_text(edited.raw_text);
      intact = after.contribution_score == before.contribution_score &&
               after.soundness_score == before.soundness_score &&
               after.presentation_score == before.presentation_score &&
               after.overall_rating == before.overall_rating;
    } catch (const Error&) {
    }
    if (intact) {
      corpus::refresh_from_raw_text(edited);
      review = std::move(edited);
    } else {
      for (auto& e : edits) {
        if (!e.applied) continue;
        e.applied = false;
        e.failure_reason = "edit altered the review scores";
      }
    }
    append(r.log.edits, std::move(edits));
  }
}

void perturb_rebuttals(PerturbResult& r, const PerturbationAspect& aspect,
                       llm::Gateway& gateway, const PerturbConfig& config) {
  const std::string tmpl = template_for(aspect);
  const std::string prefix = "perturb/" + aspect.name() + "/" + r.bundle.id();
  for (std::size_t i = 0; i < r.bundle.rebuttals.size(); ++i) {
    auto& rebuttal = r.bundle.rebuttals[i];
    const std::string prompt = roles::render_prompt(
        tmpl, {{"Rebuttal Content", strip_trailing_newlines(rebuttal.body)}});
    auto edits = request_edits(prompt, prefix + "/b" + std::to_string(i + 1),
                               "rebuttal/" + rebuttal.review_id, aspect, gateway,
                               config, r.log.llm_call_count);
    rebuttal.body = apply_edits(rebuttal.body, edits);
    append(r.log.edits, std::move(edits));
  }
}

}  // namespace

PerturbResult perturb_with_llm(const corpus::Bundle& bundle,
                               const PerturbationAspect& aspect,
                               llm::Gateway& gateway,
                               const PerturbConfig& config) {
  if (!aspect.llm_driven()) {
    throw Error(ErrorCode::kWrongAspect, aspect.name() + " is rule-based");
  }
  PerturbResult r{bundle, {bundle.id(), aspect, {}, 0, std::nullopt}, std::nullopt};
  switch (aspect.mode) {
    case Mode::kPaper: perturb_paper(r, aspect, gateway, config); break;
    case Mode::kReview: perturb_reviews(r, aspect, gateway, config); break;
    case Mode::kRebuttal: perturb_rebuttals(r, aspect, gateway, config); break;
  }
  if (r.log.applied_count() == 0) {
    throw Error(ErrorCode::kAllEditsFailed,
                aspect.name() + " applied no edit to " + bundle.id() + " (" +
                    std::to_string(r.log.edits.size()) + " proposed)");
  }
  return r;
}

PerturbResult perturb_bundle(const corpus::Bundle& bundle,
                             const PerturbationAspect& aspect,
                             llm::Gateway& gateway, const PerturbConfig& config) {
  if (aspect.llm_driven()) return perturb_with_llm(bundle, aspect, gateway, config);
  PerturbResult r{bundle, {bundle.id(), aspect, {}, 0, std::nullopt}, std::nullopt};
  if (aspect.kind == AspectKind::kConclusion) {
    const auto rules = default_flip_rules();
    for (auto& review : r.bundle.reviews) {
      auto [flipped, records] = flip_conclusion(review, rules);
      review = std::move(flipped);
      append(r.log.edits, std::move(records));
    }
    return r;
  }
  r.bucket = build_false_claim_bucket(bundle.paper, gateway, config,
                                      &r.log.llm_call_count);
  r.log.inserted_claims.emplace();
  for (auto& review : r.bundle.reviews) {
    auto [extended, chosen] = insert_false_claims(
        review, *r.bucket, derive_seed(config.seed, "factual/" + review.review_id));
    for (std::size_t idx : chosen) {
      EditRecord e;
      e.kind = EditKind::kClaimInsert;
      e.target_doc = "review/" + review.review_id;
      e.replacement = r.bucket->claims[idx].claim;
      e.applied = true;
      r.log.edits.push_back(std::move(e));
    }
    r.log.inserted_claims->push_back(std::move(chosen));
    review = std::move(extended);
  }
  return r;
}

// Accounting ----------------------------------------------------------------

std::map<std::string, EditStats> summarize_perturbations(
    const std::vector<PerturbationLog>& logs) {
  std::map<std::string, std::vector<std::size_t>> counts;
  for (const auto& log : logs) counts[log.aspect.name()].push_back(log.applied_count());
  std::map<std::string, EditStats> out;
  for (const auto& [name, values] : counts) {
    EditStats s;
    s.bundles = values.size();
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    for (auto v : values) s.sum += v;
    s.mean = static_cast<double>(s.sum) / static_cast<double>(values.size());
    out[name] = s;
  }
  return out;
}

namespace {

std::string excerpt(std::string_view s) {
  constexpr std::size_t kMax = 300;
  std::string out = text::collapse_whitespace(text::trim(s));
  if (out.size() > kMax) out = out.substr(0, kMax - 3) + "...";
  return out;
}

template <typename T>
std::vector<T> seeded_pick(std::vector<T> pool, std::size_t count,
                           std::uint64_t seed) {
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  SeededRng rng(seed);
  rng.partial_shuffle(idx, count);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  for (auto i : idx) out.push_back(pool[i]);
  return out;
}

}  // namespace

std::vector<ManifestRow> sample_for_manual_eval(
    const std::vector<PerturbationLog>& logs,
    const std::vector<FalseClaimBucket>& buckets, std::size_t per_aspect,
    std::size_t claim_sample, std::uint64_t seed) {
  std::vector<const PerturbationLog*> sorted;
  for (const auto& l : logs) sorted.push_back(&l);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->bundle_id < b->bundle_id;
  });

  std::vector<ManifestRow> rows;
  for (const auto& aspect : kAllAspects) {
    if (aspect.kind == AspectKind::kConclusion || per_aspect == 0) continue;
    std::vector<ManifestRow> pool;
    bool present = false;
    for (const auto* log : sorted) {
      if (!(log->aspect == aspect)) continue;
      present = true;
      for (const auto& e : log->edits) {
        if (!e.applied) continue;
        pool.push_back({std::string(to_string(aspect.mode)),
                        std::string(to_string(aspect.kind)), log->bundle_id,
                        excerpt(e.original), excerpt(e.replacement), ""});
      }
    }
    if (!present) continue;
    if (pool.size() < per_aspect) {
      throw Error(ErrorCode::kInsufficientSamples,
                  aspect.name() + " has " + std::to_string(pool.size()) +
                      " applied edits, " + std::to_string(per_aspect) + " requested");
    }
    auto picked = seeded_pick(std::move(pool), per_aspect, derive_seed(seed, aspect.name()));
    rows.insert(rows.end(), picked.begin(), picked.end());
  }

  if (claim_sample > 0) {
    std::vector<const FalseClaimBucket*> bs;
    for (const auto& b : buckets) bs.push_back(&b);
    std::sort(bs.begin(), bs.end(),
              [](const auto* a, const auto* b) { return a->paper_id < b->paper_id; });
    std::vector<ManifestRow> pool;
    for (const auto* b : bs) {
      for (const auto& c : b->claims) {
        pool.push_back({"review", std::string(kClaimAspect), b->paper_id, "",
                        excerpt(c.claim), ""});
      }
    }
    if (pool.size() < claim_sample) {
      throw Error(ErrorCode::kInsufficientSamples,
                  std::to_string(pool.size()) + " false claims available, " +
                      std::to_string(claim_sample) + " requested");
    }
    auto picked = seeded_pick(std::move(pool), claim_sample, derive_seed(seed, "claims"));
    rows.insert(rows.end(), picked.begin(), picked.end());
  }
  return rows;
}

std::string manifest_csv(const std::vector<ManifestRow>& rows) {
  std::string out = text::csv_row(
      {"mode", "aspect", "bundle_id", "before_excerpt", "after_excerpt", "verdict"});
  for (const auto& r : rows) {
    out += text::csv_row(
        {r.mode, r.aspect, r.bundle_id, r.before_excerpt, r.after_excerpt, r.verdict});
  }
  return out;
}

// Serialization -------------------------------------------------------------

ordered_json to_json(const EditRecord& e) {
  ordered_json j;
  j["kind"] = std::string(to_string(e.kind));
  j["target_doc"] = e.target_doc;
  j["start_anchor"] = e.start_anchor;
  j["end_anchor"] = e.end_anchor;
  j["original"] = e.original;
  j["replacement"] = e.replacement;
  j["applied"] = e.applied;
  j["failure_reason"] = e.failure_reason ? ordered_json(*e.failure_reason) : ordered_json();
  return j;
}

EditRecord edit_from_json(const json& j) {
  EditRecord e;
  e.kind = parse_edit_kind(j.at("kind").get<std::string>());
  e.target_doc = j.at("target_doc").get<std::string>();
  e.start_anchor = j.at("start_anchor").get<std::string>();
  e.end_anchor = j.at("end_anchor").get<std::string>();
  e.original = j.at("original").get<std::string>();
  e.replacement = j.at("replacement").get<std::string>();
  e.applied = j.at("applied").get<bool>();
  if (j.contains("failure_reason") && !j["failure_reason"].is_null()) {
    e.failure_reason = j["failure_reason"].get<std::string>();
  }
  return e;
}

ordered_json to_json(const PerturbationLog& log) {
  ordered_json j;
  j["bundle_id"] = log.bundle_id;
  j["aspect"] = log.aspect.name();
  j["llm_call_count"] = log.llm_call_count;
  j["applied_edits"] = log.applied_count();
  j["inserted_claims"] =
      log.inserted_claims ? ordered_json(*log.inserted_claims) : ordered_json();
  ordered_json edits = ordered_json::array();
  for (const auto& e : log.edits) edits.push_back(to_json(e));
  j["edits"] = std::move(edits);
  return j;
}

PerturbationLog log_from_json(const json& j) {
  PerturbationLog log;
  log.bundle_id = j.at("bundle_id").get<std::string>();
  log.aspect = parse_aspect(j.at("aspect").get<std::string>());
  log.llm_call_count = j.at("llm_call_count").get<int>();
  if (j.contains("inserted_claims") && !j["inserted_claims"].is_null()) {
    log.inserted_claims = j["inserted_claims"].get<std::vector<std::vector<std::size_t>>>();
  }
  for (const auto& e : j.at("edits")) log.edits.push_back(edit_from_json(e));
  return log;
}

ordered_json to_json(const FalseClaimBucket& bucket) {
  ordered_json j;
  j["paper_id"] = bucket.paper_id;
  ordered_json claims = ordered_json::array();
  for (const auto& c : bucket.claims) {
    claims.push_back({{"claim", c.claim},
                      {"why_false", c.why_false},
                      {"why_weakness", c.why_weakness}});
  }
  j["claims"] = std::move(claims);
  return j;
}

FalseClaimBucket bucket_from_json(const json& j) {
  FalseClaimBucket b;
  b.paper_id = j.at("paper_id").get<std::string>();
  for (const auto& c : j.at("claims")) {
    b.claims.push_back({c.at("claim").get<std::string>(), c.at("why_false").get<std::string>(),
                        c.at("why_weakness").get<std::string>()});
  }
  return b;
}

}  // namespace rp::perturb
