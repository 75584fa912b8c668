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

#include "rp/corpus.hpp"

#include <algorithm>
#include <array>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "rp/error.hpp"
#include "rp/fields.hpp"
#include "rp/io.hpp"
#include "rp/rng.hpp"
#include "rp/text.hpp"

namespace rp::corpus {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(DecisionCategory c) {
  switch (c) {
    case DecisionCategory::kPoster: return "poster";
    case DecisionCategory::kSpotlight: return "spotlight";
    case DecisionCategory::kOral: return "oral";
  }
  return "poster";
}

DecisionCategory parse_category(std::string_view s) {
  const auto lowered = text::to_lower(text::trim(s));
  if (lowered == "poster") return DecisionCategory::kPoster;
  if (lowered == "spotlight") return DecisionCategory::kSpotlight;
  if (lowered == "oral") return DecisionCategory::kOral;
  throw Error(ErrorCode::kUnknownCategory,
              "decision category '" + std::string(s) + "'");
}

bool Section::has_body() const { return !text::trim(body).empty(); }

Section make_section(int level, std::string_view title, std::string_view body) {
  Section s;
  s.level = level;
  s.title = std::string(title);
  s.heading = std::string(static_cast<std::size_t>(level), '#') + " " +
              s.title + "\n";
  s.body = std::string(body);
  return s;
}

std::string PaperDocument::text() const {
  std::string out = preamble;
  for (const auto& s : sections) out += s.text();
  return out;
}

namespace {

struct HeadingInfo {
  int level = 0;
  std::string title;
};

// Returns the heading level and title, nullopt for non-heading lines.
// Throws for a heading marker with no title.
std::optional<HeadingInfo> heading_of(std::string_view line,
                                      std::size_t line_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  std::size_t hashes = 0;
  while (i + hashes < line.size() && line[i + hashes] == '#') ++hashes;
  if (hashes == 0 || hashes > 6) return std::nullopt;
  const std::size_t after = i + hashes;
  if (after < line.size() && line[after] != ' ' && line[after] != '\t') {
    return std::nullopt;  // "#hashtag" is text
  }
  std::string_view rest = text::trim(line.substr(after));
  // Optional closing sequence: "## Title ##"
  auto last_non_hash = rest.find_last_not_of('#');
  if (last_non_hash == std::string_view::npos) {
    rest = {};
  } else if (last_non_hash + 1 < rest.size() &&
             (rest[last_non_hash] == ' ' || rest[last_non_hash] == '\t')) {
    rest = text::trim(rest.substr(0, last_non_hash));
  }
  if (rest.empty()) {
    throw Error(ErrorCode::kMalformedHeading,
                "heading marker without title on line " +
                    std::to_string(line_no));
  }
  return HeadingInfo{static_cast<int>(hashes), std::string(rest)};
}

bool is_fence(std::string_view line) {
  auto t = text::trim(line);
  return t.rfind("```", 0) == 0 || t.rfind("~~~", 0) == 0;
}

}  // namespace

PaperDocument parse_paper(std::string paper_id, DecisionCategory category,
                          std::string_view markdown) {
  PaperDocument doc;
  doc.paper_id = std::move(paper_id);
  doc.decision_category = category;

  bool in_fence = false;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  Section* current = nullptr;
  while (pos < markdown.size()) {
    ++line_no;
    std::size_t nl = markdown.find('\n', pos);
    std::size_t next = nl == std::string_view::npos ? markdown.size() : nl + 1;
    std::string_view line_with_nl = markdown.substr(pos, next - pos);
    std::string_view line = line_with_nl;
    if (!line.empty() && line.back() == '\n') line.remove_suffix(1);

    std::optional<HeadingInfo> heading;
    if (is_fence(line)) {
      in_fence = !in_fence;
    } else if (!in_fence) {
      heading = heading_of(line, line_no);
    }
    if (heading) {
      Section s;
      s.heading = std::string(line_with_nl);
      s.title = std::move(heading->title);
      s.level = heading->level;
      doc.sections.push_back(std::move(s));
      current = &doc.sections.back();
    } else if (current) {
      current->body.append(line_with_nl);
    } else {
      doc.preamble.append(line_with_nl);
    }
    pos = next;
  }
  if (doc.sections.empty()) {
    throw Error(ErrorCode::kMalformedHeading,
                "paper '" + doc.paper_id + "' has no headings");
  }
  return doc;
}

namespace {

enum FieldIndex : std::size_t {
  kSummary,
  kStrengths,
  kWeaknesses,
  kSoundness,
  kPresentation,
  kContribution,
  kRating,
};

const std::vector<fields::FieldSpec>& review_specs() {
  static const std::vector<fields::FieldSpec> specs = {
      {"summary", {"Summary"}},
      {"strengths", {"Strengths", "Strength"}},
      {"weaknesses", {"Weaknesses", "Weakness"}},
      {"soundness", {"Soundness"}},
      {"presentation", {"Presentation"}},
      {"contribution", {"Contribution"}},
      {"rating", {"Rating"}},
  };
  return specs;
}

int required_score(std::string_view raw, std::span<const fields::FieldHit> hits,
                   std::size_t index, int lo, int hi) {
  const auto& spec = review_specs()[index];
  auto hit = fields::first(hits, index);
  if (!hit) {
    throw Error(ErrorCode::kInvalidDocument,
                "review text lacks a '" + spec.aliases.front() + ":' line");
  }
  auto value = fields::parse_leading_int(fields::scalar_value(raw, *hit));
  if (!value || *value < lo || *value > hi) {
    throw Error(ErrorCode::kInvalidDocument,
                "review " + spec.key + " must be an integer in [" +
                    std::to_string(lo) + "," + std::to_string(hi) + "]");
  }
  return *value;
}

}  // namespace

ReviewTextFields parse_review_text(std::string_view raw) {
  const auto hits = fields::scan(raw, review_specs());
  ReviewTextFields out;
  auto text_field = [&](std::size_t index) -> std::string {
    auto hit = fields::first(hits, index);
    return hit ? std::string(fields::block_value(raw, *hit)) : std::string();
  };
  out.summary = text_field(kSummary);
  out.strengths = text_field(kStrengths);
  out.weaknesses = text_field(kWeaknesses);
  if (auto hit = fields::first(hits, kWeaknesses)) {
    auto [b, e] = fields::value_range(raw, *hit);
    out.weaknesses_begin = b;
    out.weaknesses_end = e;
  } else {
    out.weaknesses_begin = out.weaknesses_end = raw.size();
  }
  out.soundness_score = required_score(raw, hits, kSoundness, 1, 4);
  out.presentation_score = required_score(raw, hits, kPresentation, 1, 4);
  out.contribution_score = required_score(raw, hits, kContribution, 1, 4);
  out.overall_rating = required_score(raw, hits, kRating, 1, 10);
  return out;
}

std::string_view rating_label(int rating) {
  switch (rating) {
    case 1: return "strong reject";
    case 3: return "reject, not good enough";
    case 5: return "marginally below the acceptance threshold";
    case 6: return "marginally above the acceptance threshold";
    case 8: return "accept, good paper";
    case 10: return "strong accept, should be highlighted at the conference";
    default: return {};
  }
}

std::string render_review_text(const ReviewDocument& r) {
  std::string out;
  out += "Summary:\n" + r.summary + "\n\n";
  out += "Strengths:\n" + r.strengths + "\n\n";
  out += "Weaknesses:\n" + r.weaknesses + "\n\n";
  out += "Soundness: " + std::to_string(r.soundness_score) + "\n";
  out += "Presentation: " + std::to_string(r.presentation_score) + "\n";
  out += "Contribution: " + std::to_string(r.contribution_score) + "\n";
  out += "Rating: " + std::to_string(r.overall_rating);
  if (auto label = rating_label(r.overall_rating); !label.empty()) {
    out += ": ";
    out += label;
  }
  out += "\n";
  return out;
}

void refresh_from_raw_text(ReviewDocument& review) {
  auto f = parse_review_text(review.raw_text);
  review.summary = std::move(f.summary);
  review.strengths = std::move(f.strengths);
  review.weaknesses = std::move(f.weaknesses);
  review.contribution_score = f.contribution_score;
  review.soundness_score = f.soundness_score;
  review.presentation_score = f.presentation_score;
  review.overall_rating = f.overall_rating;
}

const RebuttalDocument* Bundle::rebuttal_for(std::string_view review_id) const {
  for (const auto& r : rebuttals) {
    if (r.review_id == review_id) return &r;
  }
  return nullptr;
}

void validate(const Bundle& b) {
  if (b.paper.paper_id.empty()) {
    throw Error(ErrorCode::kInvalidDocument, "empty paper id");
  }
  if (b.paper.sections.empty()) {
    throw Error(ErrorCode::kMalformedHeading, "paper has no sections");
  }
  for (const auto& s : b.paper.sections) {
    if (s.level < 1 || s.title.empty()) {
      throw Error(ErrorCode::kMalformedHeading, "section without title");
    }
  }
  if (b.reviews.empty()) {
    throw Error(ErrorCode::kMissingFile,
                "bundle '" + b.id() + "' has no reviews");
  }
  std::set<std::string> review_ids;
  for (const auto& r : b.reviews) {
    const std::string where = "review '" + r.review_id + "'";
    if (r.paper_id != b.id()) {
      throw Error(ErrorCode::kInvalidDocument,
                  where + " belongs to paper '" + r.paper_id + "'");
    }
    if (!review_ids.insert(r.review_id).second) {
      throw Error(ErrorCode::kInvalidDocument, "duplicate " + where);
    }
    for (int s : {r.contribution_score, r.soundness_score,
                  r.presentation_score}) {
      if (s < 1 || s > 4) {
        throw Error(ErrorCode::kInvalidDocument,
                    where + " has a dimension score outside 1-4");
      }
    }
    if (r.overall_rating < 1 || r.overall_rating > 10) {
      throw Error(ErrorCode::kInvalidDocument,
                  where + " has an overall rating outside 1-10");
    }
    ReviewTextFields parsed;
    try {
      parsed = parse_review_text(r.raw_text);
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidDocument, where + ": " + e.what());
    }
    if (parsed.summary != r.summary || parsed.strengths != r.strengths ||
        parsed.weaknesses != r.weaknesses ||
        parsed.contribution_score != r.contribution_score ||
        parsed.soundness_score != r.soundness_score ||
        parsed.presentation_score != r.presentation_score ||
        parsed.overall_rating != r.overall_rating) {
      throw Error(ErrorCode::kInvalidDocument,
                  where + ": raw_text disagrees with structured fields");
    }
  }
  std::set<std::string> answered;
  for (const auto& rb : b.rebuttals) {
    if (!review_ids.count(rb.review_id)) {
      throw Error(ErrorCode::kOrphanRebuttal,
                  "rebuttal references unknown review '" + rb.review_id + "'");
    }
    if (rb.paper_id != b.id()) {
      throw Error(ErrorCode::kInvalidDocument,
                  "rebuttal for '" + rb.review_id + "' belongs to paper '" +
                      rb.paper_id + "'");
    }
    if (!answered.insert(rb.review_id).second) {
      throw Error(ErrorCode::kInvalidDocument,
                  "two rebuttals answer review '" + rb.review_id + "'");
    }
  }
}

namespace {

ordered_json review_to_json(const ReviewDocument& r) {
  ordered_json j;
  j["review_id"] = r.review_id;
  j["paper_id"] = r.paper_id;
  j["summary"] = r.summary;
  j["strengths"] = r.strengths;
  j["weaknesses"] = r.weaknesses;
  j["contribution_score"] = r.contribution_score;
  j["soundness_score"] = r.soundness_score;
  j["presentation_score"] = r.presentation_score;
  j["overall_rating"] = r.overall_rating;
  j["raw_text"] = r.raw_text;
  return j;
}

ordered_json rebuttal_to_json(const RebuttalDocument& r) {
  ordered_json j;
  j["paper_id"] = r.paper_id;
  j["review_id"] = r.review_id;
  j["body"] = r.body;
  return j;
}

template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.contains(key)) {
    throw Error(ErrorCode::kInvalidDocument,
                file.string() + ": missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidDocument,
                file.string() + ": bad type for '" + key + "'");
  }
}

ReviewDocument review_from_json(const json& j, const fs::path& file) {
  ReviewDocument r;
  r.review_id = field<std::string>(j, "review_id", file);
  r.paper_id = field<std::string>(j, "paper_id", file);
  r.summary = field<std::string>(j, "summary", file);
  r.strengths = field<std::string>(j, "strengths", file);
  r.weaknesses = field<std::string>(j, "weaknesses", file);
  r.contribution_score = field<int>(j, "contribution_score", file);
  r.soundness_score = field<int>(j, "soundness_score", file);
  r.presentation_score = field<int>(j, "presentation_score", file);
  r.overall_rating = field<int>(j, "overall_rating", file);
  r.raw_text = field<std::string>(j, "raw_text", file);
  return r;
}

// Numbered files "<prefix><n>.json" sorted by n.
std::vector<std::pair<int, fs::path>> numbered_files(const fs::path& dir,
                                                     const std::string& prefix) {
  const std::regex pattern(prefix + "([0-9]+)\\.json");
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) {
      out.emplace_back(std::stoi(m[1].str()), entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

Bundle load_bundle(const fs::path& dir, DecisionCategory category) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::kMissingFile, "no bundle directory " + dir.string());
  }
  const fs::path paper_path = dir / "paper.mmd";
  if (!fs::exists(paper_path)) {
    throw Error(ErrorCode::kMissingFile, "missing " + paper_path.string());
  }
  Bundle b;
  std::string paper_id = fs::path(dir).lexically_normal().filename().string();
  if (paper_id.empty()) {
    paper_id = fs::path(dir).lexically_normal().parent_path().filename().string();
  }
  b.paper = parse_paper(paper_id, category, io::read_file(paper_path));

  const auto review_files = numbered_files(dir, "review_");
  if (review_files.empty()) {
    throw Error(ErrorCode::kMissingFile,
                "no review_<n>.json in " + dir.string());
  }
  for (const auto& [n, path] : review_files) {
    b.reviews.push_back(review_from_json(io::read_json(path), path));
  }
  std::vector<RebuttalDocument> rebuttals;
  for (const auto& [n, path] : numbered_files(dir, "rebuttal_")) {
    const json j = io::read_json(path);
    RebuttalDocument r;
    r.paper_id = field<std::string>(j, "paper_id", path);
    r.review_id = field<std::string>(j, "review_id", path);
    r.body = field<std::string>(j, "body", path);
    rebuttals.push_back(std::move(r));
  }
  validate(Bundle{b.paper, b.reviews, rebuttals});
  // Store rebuttals in review order.
  for (const auto& review : b.reviews) {
    for (auto& r : rebuttals) {
      if (r.review_id == review.review_id) b.rebuttals.push_back(r);
    }
  }
  return b;
}

std::map<std::string, std::string> serialize_bundle(const Bundle& bundle) {
  std::map<std::string, std::string> files;
  files["paper.mmd"] = bundle.paper.text();
  for (std::size_t i = 0; i < bundle.reviews.size(); ++i) {
    const auto& review = bundle.reviews[i];
    const std::string n = std::to_string(i + 1);
    files["review_" + n + ".json"] = io::dump_json(review_to_json(review));
    if (const auto* rb = bundle.rebuttal_for(review.review_id)) {
      files["rebuttal_" + n + ".json"] = io::dump_json(rebuttal_to_json(*rb));
    }
  }
  return files;
}

void write_bundle(const Bundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);
  for (const auto& [name, contents] : serialize_bundle(bundle)) {
    io::write_file_atomic(dir / name, contents);
  }
}

CorpusIndex load_corpus_index(const fs::path& corpus_json) {
  const json j = io::read_json(corpus_json);
  CorpusIndex index;
  index.root = corpus_json.parent_path();
  if (!j.contains("bundles") || !j["bundles"].is_array()) {
    throw Error(ErrorCode::kInvalidDocument,
                corpus_json.string() + ": expected a 'bundles' array");
  }
  std::set<std::string> seen;
  for (const auto& e : j["bundles"]) {
    CorpusEntry entry;
    entry.paper_id = field<std::string>(e, "paper_id", corpus_json);
    entry.category =
        parse_category(field<std::string>(e, "decision_category", corpus_json));
    const std::string dir =
        e.contains("dir") ? e["dir"].get<std::string>() : entry.paper_id;
    entry.dir = fs::path(dir).is_absolute() ? fs::path(dir) : index.root / dir;
    if (!seen.insert(entry.paper_id).second) {
      throw Error(ErrorCode::kInvalidDocument,
                  "duplicate paper_id '" + entry.paper_id + "' in corpus");
    }
    index.entries.push_back(std::move(entry));
  }
  return index;
}

std::vector<Bundle> load_corpus(const CorpusIndex& index) {
  std::vector<Bundle> bundles;
  bundles.reserve(index.entries.size());
  for (const auto& e : index.entries) {
    Bundle b = load_bundle(e.dir, e.category);
    if (b.paper.paper_id != e.paper_id) {
      throw Error(ErrorCode::kInvalidDocument,
                  "bundle dir '" + e.dir.string() + "' does not match id '" +
                      e.paper_id + "'");
    }
    bundles.push_back(std::move(b));
  }
  return bundles;
}

std::size_t CategoryCounts::get(DecisionCategory c) const {
  switch (c) {
    case DecisionCategory::kPoster: return poster;
    case DecisionCategory::kSpotlight: return spotlight;
    case DecisionCategory::kOral: return oral;
  }
  return 0;
}

std::size_t& CategoryCounts::at(DecisionCategory c) {
  switch (c) {
    case DecisionCategory::kSpotlight: return spotlight;
    case DecisionCategory::kOral: return oral;
    default: return poster;
  }
}

std::vector<std::string> stratified_sample(const std::vector<PoolEntry>& pool,
                                           const CategoryCounts& targets,
                                           std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<std::string> out;
  out.reserve(targets.total());
  for (DecisionCategory c : kAllCategories) {
    std::vector<std::string> ids;
    for (const auto& [id, cat] : pool) {
      if (cat == c) ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    const std::size_t want = targets.get(c);
    if (want > ids.size()) {
      throw Error(ErrorCode::kInsufficientPool,
                  "target " + std::to_string(want) + " exceeds " +
                      std::to_string(ids.size()) + " " +
                      std::string(to_string(c)) + " papers");
    }
    rng.partial_shuffle(ids, want);
    out.insert(out.end(), ids.begin(),
               ids.begin() + static_cast<std::ptrdiff_t>(want));
  }
  return out;
}

CategoryCounts proportional_targets(std::size_t total,
                                    const CategoryCounts& shares) {
  CategoryCounts out;
  const std::size_t denom = shares.total();
  if (denom == 0 || total == 0) return out;
  std::array<std::pair<std::size_t, std::size_t>, 3> remainders{};  // (rem, idx)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto c = kAllCategories[i];
    const std::size_t num = total * shares.get(c);
    out.at(c) = num / denom;
    assigned += out.at(c);
    remainders[i] = {num % denom, i};
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
    ++out.at(kAllCategories[remainders[k % 3].second]);
  }
  return out;
}

}  // namespace rp::corpus
