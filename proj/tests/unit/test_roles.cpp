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

#include <gtest/gtest.h>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/roles.hpp"
#include "test_util.hpp"

namespace rp::roles {
namespace {

using rp::testing::corpus6_dir;
using rp::testing::test_dir;

corpus::Bundle fixture(const char* id) { return corpus::load_bundle(corpus6_dir() / id); }

TEST(Templates, MatchGoldenTranscriptions) {
  for (const char* id : kTemplateIds) {
    const auto golden =
        io::read_file(test_dir() / "golden" / "prompts" / (std::string(id) + ".txt"));
    EXPECT_EQ(load_template(id), golden) << id;
  }
}

TEST(Templates, ReviewerRubricLines) {
  const auto t = load_template("reviewer");
  EXPECT_NE(t.find("1 = strong reject."), std::string::npos);
  EXPECT_NE(t.find("10 = strong accept, should be highlighted at the conference."),
            std::string::npos);
  EXPECT_EQ(placeholders(t), std::vector<std::string>{"Paper Content"});
}

TEST(Templates, UnknownTemplate) {
  try {
    load_template("meta_freeform");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownTemplate);
  }
}

TEST(Templates, UnboundPlaceholder) {
  try {
    render_text("Paper:\n[Paper Content here]\n", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnboundPlaceholder);
  }
}

TEST(Templates, RenderIsSinglePass) {
  const auto out = render_text("[A here]|[B here]",
                               {{"A", "[B here]"}, {"B", "x"}});
  EXPECT_EQ(out, "[B here]|x");
}

TEST(Templates, ExpandReviewBlocksPerVariant) {
  for (auto v : kAllVariants) {
    const auto t = load_template("meta_" + std::string(to_string(v)));
    const auto expanded = expand_review_blocks(t, 4);
    const auto ph = placeholders(expanded);
    for (int i = 1; i <= 4; ++i) {
      const auto r = "Review " + std::to_string(i) + " Content";
      const auto b = "Rebuttal " + std::to_string(i) + " Content";
      EXPECT_EQ(std::count(ph.begin(), ph.end(), r), 1) << r;
      EXPECT_EQ(std::count(ph.begin(), ph.end(), b), 1) << b;
    }
    EXPECT_EQ(expanded.find("Review n"), std::string::npos);
    EXPECT_EQ(expanded.find("\n...\n"), std::string::npos);
  }
}

TEST(Prompts, ReviewerSeesOnlyThePaper) {
  const auto b = fixture("causal-probe");
  const auto p = render_reviewer_prompt(b.paper);
  EXPECT_EQ(p.dropped_sections, 0u);
  EXPECT_NE(p.text.find(b.paper.sections.back().title), std::string::npos);
  for (const auto& r : b.reviews) {
    EXPECT_EQ(p.text.find(r.weaknesses), std::string::npos);
  }
  for (const auto& r : b.rebuttals) {
    EXPECT_EQ(p.text.find(r.body.substr(0, 60)), std::string::npos);
  }
}

TEST(Prompts, MetaPromptKeepsReviewOrder) {
  const auto b = fixture("offline-rl");
  for (auto v : kAllVariants) {
    const auto p = render_meta_prompt(b, v).text;
    std::size_t last = 0;
    for (const auto& r : b.reviews) {
      const auto pos = p.find(r.raw_text.substr(0, r.raw_text.find_last_not_of('\n') + 1));
      ASSERT_NE(pos, std::string::npos);
      EXPECT_GT(pos, last);
      last = pos;
      const auto* reb = b.rebuttal_for(r.review_id);
      ASSERT_NE(reb, nullptr);
      const auto rpos = p.find(reb->body.substr(0, 40));
      ASSERT_NE(rpos, std::string::npos);
      EXPECT_GT(rpos, pos);
      last = rpos;
    }
    EXPECT_EQ(p.find("[Review"), std::string::npos);
  }
}

TEST(Prompts, MissingRebuttalIsMarked) {
  auto b = fixture("offline-rl");
  b.rebuttals.pop_back();
  const auto p = render_meta_prompt(b, CotVariant::kNone).text;
  EXPECT_NE(p.find("(no rebuttal)"), std::string::npos);
}

TEST(Prompts, TruncationDropsTrailingSections) {
  const auto b = fixture("sparse-routing");
  const auto full = render_reviewer_prompt(b.paper).text;
  const auto cut = render_reviewer_prompt(b.paper, full.size() - 1);
  EXPECT_GE(cut.dropped_sections, 1u);
  EXPECT_LE(cut.text.size(), full.size() - 1);
  EXPECT_EQ(cut.text.find(b.paper.sections.back().heading), std::string::npos);
}

constexpr const char* kReview =
    "Summary: A method.\nStrengths:\n- clear\nWeaknesses:\n- small data\n"
    "Contribution: 3\nSoundness: 2 = fair\nPresentation: 4\n";

TEST(ReviewerParse, ScoreWithRubricSuffix) {
  const auto o = parse_reviewer_output(std::string(kReview) +
                                       "Overall Score: 6 = marginally above\n");
  EXPECT_EQ(o.overall_rating, 6);
  EXPECT_EQ(o.soundness_score, 2);
  EXPECT_EQ(o.weaknesses, "- small data");
}

TEST(ReviewerParse, WordRatingIsParseError) {
  try {
    parse_reviewer_output(std::string(kReview) + "Rating: ten\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("rating"), std::string::npos);
  }
}

TEST(ReviewerParse, FirstOccurrenceWins) {
  const auto o =
      parse_reviewer_output(std::string(kReview) + "Rating: 8\nRating: 3\n");
  EXPECT_EQ(o.overall_rating, 8);
}

TEST(ReviewerParse, ListsAllMissingFields) {
  try {
    parse_reviewer_output("Summary: nothing else\n");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    for (const char* f : {"contribution", "soundness", "presentation", "rating"}) {
      EXPECT_NE(msg.find(f), std::string::npos) << f;
    }
  }
}

TEST(ReviewerParse, OutOfRange) {
  EXPECT_THROW(parse_reviewer_output(std::string(kReview) + "Rating: 11\n"), Error);
  EXPECT_THROW(parse_reviewer_output("Contribution: 5\nSoundness: 2\n"
                                     "Presentation: 2\nRating: 4\n"),
               Error);
}

TEST(MetaParse, DecisionText) {
  EXPECT_EQ(parse_decision_text("Accept as Spotlight"), FinalDecision::kAcceptSpotlight);
  EXPECT_EQ(parse_decision_text("**Accept (Oral)**"), FinalDecision::kAcceptOral);
  EXPECT_EQ(parse_decision_text("accept as poster."), FinalDecision::kAcceptPoster);
  EXPECT_EQ(parse_decision_text("Reject. Not an oral paper"), FinalDecision::kReject);
  EXPECT_EQ(parse_decision_text("Accept"), std::nullopt);
}

TEST(MetaParse, Variants) {
  const auto none = parse_meta_output(
      "Overall Score: 6\nFinal Decision: Accept as Spotlight\n", CotVariant::kNone);
  EXPECT_EQ(none.overall_score, 6);
  EXPECT_EQ(none.final_decision, FinalDecision::kAcceptSpotlight);
  EXPECT_FALSE(none.contribution_score.has_value());

  EXPECT_THROW(parse_meta_output("Overall Score: 6\nFinal Decision: Reject\n",
                                 CotVariant::kDimension),
               Error);
  const auto dim = parse_meta_output(
      "Contribution: 3\nSoundness: 2\nPresentation: 3\nOverall Score: 5\n"
      "Final Decision: Reject\n",
      CotVariant::kDimension);
  EXPECT_EQ(dim.soundness_score, 2);

  EXPECT_THROW(parse_meta_output("Overall Score: 6\nFinal Decision: Reject\n",
                                 CotVariant::kTemplate),
               Error);
  const auto tpl = parse_meta_output(
      "Metareview: ok\nJustification For Why Not Higher Score: a\n"
      "Justification For Why Not Lower Score: b\nOverall Score: 8\n"
      "Final Decision: Accept as Spotlight\n",
      CotVariant::kTemplate);
  EXPECT_EQ(tpl.why_not_lower, "b");
  EXPECT_EQ(tpl.metareview, "ok");
}

TEST(MetaParse, BareAcceptIsParseError) {
  try {
    parse_meta_output("Overall Score: 7\nFinal Decision: Accept\n", CotVariant::kNone);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
}

TEST(Run, RetriesOnceWithReminder) {
  llm::MockRule bad;
  bad.tag_prefix = "review/x";
  bad.responses = {"I liked it.", "Contribution: 3\nSoundness: 3\nPresentation: 3\nRating: 6\n"};
  auto mock = std::make_shared<llm::MockProvider>(std::vector<llm::MockRule>{bad}, false);
  llm::Gateway gw(mock, std::nullopt);
  RunInfo info;
  const auto o = run_reviewer(fixture("graph-denoise").paper, gw, {}, "review/x", &info);
  EXPECT_EQ(o.overall_rating, 6);
  EXPECT_EQ(info.attempts, 2);
  const auto recs = gw.records();
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[1].request_tag, "review/x/retry");
  EXPECT_NE(format_reminder(std::nullopt).find("Please follow the output format exactly"),
            std::string::npos);
}

TEST(Run, GivesUpAfterRetry) {
  llm::MockRule bad;
  bad.tag_prefix = "meta";
  bad.responses = {"no idea"};
  auto mock = std::make_shared<llm::MockProvider>(std::vector<llm::MockRule>{bad}, false);
  llm::Gateway gw(mock, std::nullopt);
  EXPECT_THROW(run_meta_reviewer(fixture("graph-denoise"), CotVariant::kNone, gw, {},
                                 "meta/none/graph-denoise"),
               Error);
  EXPECT_EQ(mock->calls(), 2u);
}

TEST(Run, SyntheticRolesParse) {
  auto mock = std::make_shared<llm::MockProvider>();
  llm::Gateway gw(mock, std::nullopt);
  const auto b = fixture("vision-prompt");
  const auto r = run_reviewer(b.paper, gw, {}, "review/vision-prompt");
  EXPECT_GE(r.overall_rating, 1);
  for (auto v : kAllVariants) {
    const auto m = run_meta_reviewer(b, v, gw, {},
                                     "meta/" + std::string(to_string(v)) + "/vision-prompt");
    EXPECT_EQ(m.contribution_score.has_value(), v == CotVariant::kDimension);
    EXPECT_EQ(m.why_not_higher.has_value(), v == CotVariant::kTemplate);
  }
}

TEST(Json, RoundTrip) {
  MetaReviewerOutput m;
  m.variant = CotVariant::kDimension;
  m.contribution_score = 3;
  m.overall_score = 8;
  m.final_decision = FinalDecision::kAcceptSpotlight;
  m.raw_text = "x";
  const auto back = meta_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back), to_json(m));

  ReviewerOutput r = parse_reviewer_output(std::string(kReview) + "Rating: 5\n");
  EXPECT_EQ(to_json(reviewer_from_json(nlohmann::json::parse(to_json(r).dump()))),
            to_json(r));
}

}  // namespace
}  // namespace rp::roles
