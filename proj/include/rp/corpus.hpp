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

namespace rp::corpus {

namespace fs = std::filesystem;

enum class DecisionCategory { kPoster, kSpotlight, kOral };

inline constexpr DecisionCategory kAllCategories[] = {
    DecisionCategory::kPoster, DecisionCategory::kSpotlight,
    DecisionCategory::kOral};

std::string_view to_string(DecisionCategory c);
DecisionCategory parse_category(std::string_view s);

/// One `#`-headed block of a paper. `heading` is the raw heading line
/// including its terminator, so heading + body reproduces the source bytes.
struct Section {
  std::string heading;
  std::string title;
  int level = 1;
  std::string body;

  std::string text() const { return heading + body; }
  bool has_body() const;
};

Section make_section(int level, std::string_view title, std::string_view body);

struct PaperDocument {
  std::string paper_id;
  DecisionCategory decision_category = DecisionCategory::kPoster;
  std::string preamble;  // bytes before the first heading, usually empty
  std::vector<Section> sections;

  std::string text() const;
};

/// Splits markdown into sections on ATX headings (`#` .. `######` followed
/// by a space). Lines inside ``` fences are never headings.
PaperDocument parse_paper(std::string paper_id, DecisionCategory category,
                          std::string_view markdown);

struct ReviewDocument {
  std::string review_id;
  std::string paper_id;
  std::string summary;
  std::string strengths;
  std::string weaknesses;
  int contribution_score = 0;
  int soundness_score = 0;
  int presentation_score = 0;
  int overall_rating = 0;
  std::string raw_text;
};

/// The structured view recovered from a review's raw text.
struct ReviewTextFields {
  std::string summary;
  std::string strengths;
  std::string weaknesses;
  int contribution_score = 0;
  int soundness_score = 0;
  int presentation_score = 0;
  int overall_rating = 0;
  /// Offsets of the trimmed weaknesses value inside the raw text.
  std::size_t weaknesses_begin = 0;
  std::size_t weaknesses_end = 0;
};

/// Throws kInvalidDocument when a score is missing or out of range.
ReviewTextFields parse_review_text(std::string_view raw_text);

/// Canonical raw text for structured fields; parse_review_text inverts it.
std::string render_review_text(const ReviewDocument& review);

/// ICLR rubric wording for the anchor ratings, empty for other values.
std::string_view rating_label(int rating);

/// Re-derives the structured fields from raw_text.
void refresh_from_raw_text(ReviewDocument& review);

struct RebuttalDocument {
  std::string paper_id;
  std::string review_id;
  std::string body;
};

struct Bundle {
  PaperDocument paper;
  std::vector<ReviewDocument> reviews;
  std::vector<RebuttalDocument> rebuttals;

  const std::string& id() const { return paper.paper_id; }
  const RebuttalDocument* rebuttal_for(std::string_view review_id) const;
};

/// Checks every Bundle invariant; throws kInvalidDocument/kOrphanRebuttal.
void validate(const Bundle& bundle);

/// Loads `paper.mmd`, `review_<n>.json`, `rebuttal_<n>.json` from dir. The
/// paper id is the directory name.
Bundle load_bundle(const fs::path& dir,
                   DecisionCategory category = DecisionCategory::kPoster);

/// File name -> canonical bytes for every file of the bundle.
std::map<std::string, std::string> serialize_bundle(const Bundle& bundle);

void write_bundle(const Bundle& bundle, const fs::path& dir);

struct CorpusEntry {
  std::string paper_id;
  DecisionCategory category = DecisionCategory::kPoster;
  fs::path dir;
};

struct CorpusIndex {
  fs::path root;
  std::vector<CorpusEntry> entries;
};

/// Reads `corpus.json` ({"bundles": [{"paper_id", "decision_category",
/// optional "dir"}]}). Relative dirs resolve against the index location.
CorpusIndex load_corpus_index(const fs::path& corpus_json);
std::vector<Bundle> load_corpus(const CorpusIndex& index);

struct CategoryCounts {
  std::size_t poster = 0;
  std::size_t spotlight = 0;
  std::size_t oral = 0;

  std::size_t get(DecisionCategory c) const;
  std::size_t& at(DecisionCategory c);
  std::size_t total() const { return poster + spotlight + oral; }
};

using PoolEntry = std::pair<std::string, DecisionCategory>;

/// Uniform sample without replacement of targets.get(c) ids per category.
/// Output is grouped poster, spotlight, oral; within a group ids appear in
/// the seeded shuffle order. Ids are sorted before shuffling so the result
/// does not depend on pool order.
std::vector<std::string> stratified_sample(const std::vector<PoolEntry>& pool,
                                           const CategoryCounts& targets,
                                           std::uint64_t seed);

/// Largest-remainder allocation of `total` proportional to `shares`.
CategoryCounts proportional_targets(std::size_t total,
                                    const CategoryCounts& shares);

}  // namespace rp::corpus
