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

#include <cstdlib>

#include "rp/config.hpp"
#include "rp/error.hpp"

namespace rp::config {
namespace {

TEST(ConfigDocument, ParsesTablesAndTypes) {
  const auto doc = parse_document(
      "# run settings\n"
      "[run]\n"
      "seed = 42\n"
      "jobs = 2  # threads\n"
      "aspects = [\"paper.soundness\", \"review.tone\"]\n"
      "\n"
      "[stats]\n"
      "alpha = 0.01\n"
      "decision_mapping = \"proportional\"\n"
      "[provider]\n"
      "kind = \"mock\"\n"
      "flag = true\n");
  EXPECT_EQ(std::get<std::int64_t>(doc.at("run.seed")), 42);
  EXPECT_EQ(std::get<std::int64_t>(doc.at("run.jobs")), 2);
  EXPECT_EQ(std::get<std::vector<std::string>>(doc.at("run.aspects")).size(), 2u);
  EXPECT_DOUBLE_EQ(std::get<double>(doc.at("stats.alpha")), 0.01);
  EXPECT_EQ(std::get<std::string>(doc.at("provider.kind")), "mock");
  EXPECT_TRUE(std::get<bool>(doc.at("provider.flag")));
}

TEST(ConfigDocument, StringEscapesAndHashInsideString) {
  const auto doc = parse_document("name = \"a # b \\\"q\\\"\"\n");
  EXPECT_EQ(std::get<std::string>(doc.at("name")), "a # b \"q\"");
}

TEST(ConfigDocument, ErrorsNameTheLine) {
  for (const char* bad : {"x = \n", "[run\n", "x = 1\nx = 2\n", "just words\n",
                          "x = \"open\n", "x = 1 2\n", "x = [1, 2]\n", "x = 1.2.3\n"}) {
    try {
      parse_document(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfigError);
      EXPECT_NE(std::string(e.what()).find("line "), std::string::npos);
    }
  }
}

TEST(ConfigApply, FileOverridesDefaults) {
  PipelineConfig c;
  apply_document(c, parse_document("[run]\nseed = 9\nvariants = [\"template\"]\n"
                                   "[stats]\nmargin_overall = 0.75\n"
                                   "decision_mapping = \"proportional\"\n"
                                   "[policy]\nmax_in_flight = 2\n"));
  EXPECT_EQ(c.seed, 9u);
  ASSERT_EQ(c.variants.size(), 1u);
  EXPECT_EQ(c.variants[0], roles::CotVariant::kTemplate);
  EXPECT_DOUBLE_EQ(c.margin_overall, 0.75);
  EXPECT_EQ(c.decision_mapping, stats::MappingScheme::kProportional);
  EXPECT_EQ(c.max_in_flight, 2);
  EXPECT_EQ(c.aspects.size(), 9u);
}

TEST(ConfigApply, RejectsUnknownKeysAndWrongTypes) {
  PipelineConfig c;
  EXPECT_THROW(apply_document(c, parse_document("[run]\nsed = 1\n")), Error);
  EXPECT_THROW(apply_document(c, parse_document("[run]\njobs = \"4\"\n")), Error);
  EXPECT_THROW(apply_document(c, parse_document("[run]\njobs = 0\n")), Error);
  EXPECT_THROW(apply_document(c, parse_document("[run]\naspects = [\"paper.tone\"]\n")), Error);
}

TEST(ConfigApply, EnvironmentBelowFile) {
  ::setenv("RP_PROVIDER", "gemini", 1);
  ::setenv("RP_API_KEY", "secret-key", 1);
  PipelineConfig c;
  apply_environment(c);
  EXPECT_EQ(c.provider, "gemini");
  apply_document(c, parse_document("[provider]\nkind = \"mock\"\n"));
  EXPECT_EQ(c.provider, "mock");
  EXPECT_EQ(c.api_key, "secret-key");
  ::unsetenv("RP_PROVIDER");
  ::unsetenv("RP_API_KEY");

  const auto j = to_json(c);
  EXPECT_EQ(j.dump().find("secret-key"), std::string::npos);
}

TEST(ConfigJson, RecordsResolvedValues) {
  PipelineConfig c;
  c.seed = 5;
  c.aspects = {parse_aspect("rebuttal.tone")};
  const auto j = to_json(c);
  EXPECT_EQ(j["seed"], 5);
  EXPECT_EQ(j["aspects"][0], "rebuttal.tone");
  EXPECT_EQ(j["variants"].size(), 3u);
  EXPECT_EQ(j["stats"]["margin_dim"], 0.5);
  EXPECT_EQ(j["stats"]["margin_overall"], 1.0);
  EXPECT_EQ(j["stats"]["margin_decision"], 0.5);
}

TEST(ConfigRunId, HasTimestampShape) {
  const auto a = new_run_id();
  EXPECT_EQ(a.rfind("run-", 0), 0u);
  EXPECT_EQ(a.size(), std::string("run-20260101T000000Z-abcd").size());
}

}  // namespace
}  // namespace rp::config
