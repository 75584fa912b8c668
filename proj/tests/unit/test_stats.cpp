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

#include <cmath>

#include "../oracles/kappa_oracle.hpp"
#include "../oracles/t_oracle.hpp"
#include "../oracles/wilcoxon_oracle.hpp"
#include "rp/error.hpp"
#include "rp/rng.hpp"
#include "rp/stats.hpp"

namespace rp::stats {
namespace {

using roles::FinalDecision;

PairedSamples samples_from(const std::vector<double>& baseline,
                           const std::vector<double>& perturbed) {
  std::map<std::string, double> b, p;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const std::string id = "b" + std::to_string(100 + i);
    b[id] = baseline[i];
    p[id] = perturbed[i];
  }
  return pair_runs(b, p, "overall");
}

TEST(PairRuns, InnerJoin) {
  const auto s = pair_runs({{"A", 8}, {"B", 6}}, {{"A", 7}, {"B", 6}, {"C", 5}}, "overall");
  ASSERT_EQ(s.pairs.size(), 2u);
  EXPECT_EQ(s.pairs[0].bundle_id, "A");
  EXPECT_EQ(s.perturbed_only, 1u);
  EXPECT_EQ(s.differences(), (std::vector<double>{1, 0}));
  try {
    pair_runs({{"A", 1}}, {{"B", 1}}, "overall");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyIntersection);
  }
}

TEST(Wilcoxon, Examples) {
  const auto a = wilcoxon_signed_rank(std::vector<double>{1, 2, 3, 4, 5, 6});
  EXPECT_EQ(a.w_plus, 21);
  EXPECT_DOUBLE_EQ(a.p_greater, 1.0 / 64);
  EXPECT_EQ(a.method, WilcoxonMethod::kExact);

  const auto zero = wilcoxon_signed_rank(std::vector<double>{0, 0, 0});
  EXPECT_EQ(zero.n_nonzero, 0u);
  EXPECT_EQ(zero.p_greater, 1.0);
  EXPECT_EQ(zero.p_less, 1.0);
  EXPECT_EQ(zero.method, WilcoxonMethod::kExact);

  const auto two = wilcoxon_signed_rank(std::vector<double>{2, -1});
  EXPECT_EQ(two.w_plus, 2);
  EXPECT_DOUBLE_EQ(two.p_greater, 0.5);
}

TEST(Wilcoxon, TiesUseAverageRanks) {
  const auto w = wilcoxon_signed_rank(std::vector<double>{1, -1, 2, 2});
  EXPECT_DOUBLE_EQ(w.w_plus, 1.5 + 3.5 + 3.5);
  EXPECT_DOUBLE_EQ(w.w_minus, 1.5);
}

TEST(Wilcoxon, MatchesBruteForceOracle) {
  SeededRng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(12);
    std::vector<double> d;
    for (std::size_t i = 0; i < n; ++i) {
      d.push_back(static_cast<double>(static_cast<int>(rng.below(7)) - 3));
    }
    const auto got = wilcoxon_signed_rank(d);
    const auto want = oracle::brute_force(d);
    EXPECT_NEAR(got.p_greater, want.p_greater, 1e-12);
    EXPECT_NEAR(got.p_less, want.p_less, 1e-12);
  }
}

TEST(Wilcoxon, RankCompletenessAndAntisymmetry) {
  SeededRng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(40);
    std::vector<double> d, neg;
    for (std::size_t i = 0; i < n; ++i) {
      const double v = static_cast<double>(static_cast<int>(rng.below(9)) - 4) / 2.0;
      d.push_back(v);
      neg.push_back(-v);
    }
    const auto a = wilcoxon_signed_rank(d);
    const auto b = wilcoxon_signed_rank(neg);
    const double N = static_cast<double>(a.n_nonzero);
    EXPECT_DOUBLE_EQ(a.w_plus + a.w_minus, N * (N + 1) / 2);
    EXPECT_EQ(a.w_plus, b.w_minus);
    EXPECT_EQ(a.p_greater, b.p_less);
    EXPECT_EQ(a.p_less, b.p_greater);
    EXPECT_EQ(a.method == WilcoxonMethod::kExact, a.n_nonzero <= kDefaultExactThreshold);
  }
}

std::vector<double> untied(SeededRng& rng, std::size_t n) {
  std::vector<double> d;
  for (std::size_t i = 0; i < n; ++i) d.push_back(rng.unit() - 0.8 * rng.unit());
  return d;
}

TEST(Wilcoxon, ExactAndNormalAgreeWithoutTies) {
  SeededRng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 600; ++trial) {
    const auto d = untied(rng, 12 + rng.below(14));
    const auto exact = wilcoxon_signed_rank(d, 100);
    const auto normal = wilcoxon_signed_rank(d, 0);
    worst = std::max(worst, std::fabs(exact.p_greater - normal.p_greater));
    worst = std::max(worst, std::fabs(exact.p_less - normal.p_less));
  }
  EXPECT_LE(worst, 0.02);
}

// Below N=12 the uncorrected normal tail drifts past 0.02; a half-rank
// continuity shift closes the gap.
TEST(Wilcoxon, SmallSampleGapIsTheContinuityStep) {
  SeededRng rng(7);
  double raw = 0.0, corrected = 0.0;
  for (int trial = 0; trial < 600; ++trial) {
    const auto d = untied(rng, 10 + rng.below(2));
    const auto exact = wilcoxon_signed_rank(d, 100);
    const auto normal = wilcoxon_signed_rank(d, 0);
    const double n = static_cast<double>(exact.n_nonzero);
    const double mu = n * (n + 1) / 4;
    const double sd = std::sqrt(n * (n + 1) * (2 * n + 1) / 24);
    const double pg = 0.5 * std::erfc((exact.w_plus - 0.5 - mu) / sd / std::sqrt(2.0));
    raw = std::max(raw, std::fabs(exact.p_greater - normal.p_greater));
    corrected = std::max(corrected, std::fabs(exact.p_greater - pg));
  }
  EXPECT_GT(raw, 0.02);
  EXPECT_LE(corrected, 0.02);
}

TEST(Tost, Examples) {
  // mean outside the margin
  const auto far = tost_equivalence({0.5, 0.7, 0.6, 0.6}, 0.5, 0.05);
  EXPECT_GE(far.t_upper, 0.0);
  EXPECT_FALSE(far.equivalent);

  const auto zero = tost_equivalence({0, 0, 0}, 0.5, 0.05);
  EXPECT_EQ(zero.sd_diff, 0.0);
  EXPECT_TRUE(zero.equivalent);
  EXPECT_FALSE(tost_equivalence({0.7, 0.7, 0.7}, 0.5, 0.05).equivalent);

  EXPECT_THROW(tost_equivalence({1.0}, 0.5, 0.05), Error);
  EXPECT_THROW(tost_equivalence({}, 0.5, 0.05), Error);
}

TEST(Tost, ThirtyPairsExample) {
  // n=30, mean 0.05, sample sd 0.2
  std::vector<double> d;
  const double a = 0.2 * std::sqrt(29.0 / 30.0);
  for (int i = 0; i < 15; ++i) {
    d.push_back(0.05 + a);
    d.push_back(0.05 - a);
  }
  const auto t = tost_equivalence(d, 0.5, 0.05);
  EXPECT_NEAR(t.sd_diff, 0.2, 1e-12);
  EXPECT_NEAR(t.t_lower, 15.06, 0.01);
  EXPECT_NEAR(t.t_upper, -12.32, 0.01);
  EXPECT_NEAR(t.critical_t, 1.699, 0.001);
  EXPECT_TRUE(t.equivalent);
}

TEST(Tost, CriticalValueMatchesQuadratureOracle) {
  for (double df : {1.0, 2.0, 5.0, 29.0, 120.0}) {
    const double c = t_critical(0.05, df);
    EXPECT_NEAR(oracle::t_upper_tail(c, df), 0.05, 1e-7) << df;
  }
}

TEST(Tost, MonotoneInMargin) {
  SeededRng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d;
    const auto n = 2 + rng.below(30);
    for (std::size_t i = 0; i < n; ++i) d.push_back(rng.unit() - 0.5);
    const double m = rng.unit();
    if (tost_equivalence(d, m, 0.05).equivalent) {
      EXPECT_TRUE(tost_equivalence(d, m + 0.1, 0.05).equivalent);
    }
  }
}

TEST(Classify, Verdicts) {
  std::vector<double> base(20, 6.0), lower(20, 4.0), higher(20, 8.0);
  EXPECT_EQ(classify_outcome(samples_from(base, lower), 1.0, 0.05).value, Verdict::kDecrease);
  EXPECT_EQ(classify_outcome(samples_from(base, higher), 1.0, 0.05).value, Verdict::kIncrease);
  const auto same = classify_outcome(samples_from(base, base), 1.0, 0.05);
  EXPECT_EQ(same.value, Verdict::kInvariance);
  EXPECT_EQ(same.wilcoxon.n_nonzero, 0u);

  const auto noisy = classify_outcome(
      samples_from({5, 5, 5, 5, 5}, {8, 2, 7, 3, 5}), 1.0, 0.05);
  EXPECT_EQ(noisy.value, Verdict::kInconclusive);
  ASSERT_TRUE(noisy.tost.has_value());
  EXPECT_FALSE(noisy.tost->equivalent);
}

TEST(Decisions, Mapping) {
  EXPECT_EQ(map_decision(FinalDecision::kReject, MappingScheme::kSimple), 0.0);
  EXPECT_EQ(map_decision(FinalDecision::kAcceptOral, MappingScheme::kSimple), 3.0);
  EXPECT_EQ(map_decision(FinalDecision::kAcceptPoster, MappingScheme::kProportional), 1.0);
  double prev = -1;
  for (auto d : roles::kAllDecisions) {
    const double v = map_decision(d, MappingScheme::kSimple);
    EXPECT_GT(v, prev);
    prev = v;
  }
  const auto w = proportional_weights({FinalDecision::kAcceptPoster, FinalDecision::kAcceptPoster,
                                       FinalDecision::kAcceptPoster, FinalDecision::kAcceptPoster,
                                       FinalDecision::kAcceptSpotlight,
                                       FinalDecision::kAcceptSpotlight,
                                       FinalDecision::kAcceptOral});
  EXPECT_DOUBLE_EQ(w.spotlight, 1.0);
  EXPECT_DOUBLE_EQ(w.oral, 3.0);
  EXPECT_DOUBLE_EQ(map_decision(FinalDecision::kAcceptOral, MappingScheme::kProportional, w), 4.0);
}

TEST(Kappa, Examples) {
  EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<std::string>{"A", "B", "A"},
                               std::vector<std::string>{"A", "B", "A"}),
                   1.0);
  EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<std::string>{"A", "A", "B", "B"},
                               std::vector<std::string>{"A", "B", "A", "B"}),
                   0.0);
  EXPECT_DOUBLE_EQ(cohen_kappa(std::vector<std::string>{"A", "A"},
                               std::vector<std::string>{"A", "A"}),
                   1.0);
  EXPECT_THROW(cohen_kappa(std::vector<std::string>{"A"}, std::vector<std::string>{}), Error);
}

TEST(Kappa, MatchesConfusionTableOracle) {
  SeededRng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = 1 + rng.below(100);
    std::vector<std::string> a, b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(std::string(1, static_cast<char>('a' + rng.below(4))));
      b.push_back(rng.below(3) == 0 ? a.back()
                                    : std::string(1, static_cast<char>('a' + rng.below(4))));
    }
    const double k = cohen_kappa(a, b);
    EXPECT_NEAR(k, oracle::kappa(a, b), 1e-12);
    EXPECT_GE(k, -1.0);
    EXPECT_LE(k, 1.0);
  }
}

TEST(Transitions, Counts) {
  const std::vector<std::string> order = {"reject", "accept_poster"};
  const auto m = transition_matrix({"accept_poster", "accept_poster"},
                                   {"reject", "accept_poster"}, order);
  EXPECT_EQ(m[1][0], 1u);
  EXPECT_EQ(m[1][1], 1u);
  EXPECT_EQ(m[0][0] + m[0][1], 0u);
  const auto diag = transition_matrix({"reject", "accept_poster"}, {"reject", "accept_poster"}, order);
  EXPECT_EQ(diag, (CountMatrix{{1, 0}, {0, 1}}));
  EXPECT_THROW(transition_matrix({"oral"}, {"reject"}, order), Error);
  EXPECT_THROW(transition_matrix({"reject"}, {}, order), Error);
}

TEST(Transitions, TotalEqualsLength) {
  SeededRng rng(10);
  const auto order = decision_order();
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> a, b;
    const auto n = rng.below(60);
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(order[rng.below(4)]);
      b.push_back(order[rng.below(4)]);
    }
    std::size_t total = 0;
    for (const auto& row : transition_matrix(a, b, order)) {
      for (auto c : row) total += c;
    }
    EXPECT_EQ(total, n);
  }
}

TEST(Deltas, AcceptanceAndMean) {
  using D = FinalDecision;
  EXPECT_EQ(acceptance_rate_delta({D::kReject, D::kAcceptOral}, {D::kReject, D::kAcceptOral}), 0.0);
  EXPECT_DOUBLE_EQ(
      acceptance_rate_delta({D::kAcceptPoster, D::kAcceptPoster, D::kAcceptOral, D::kReject},
                            {D::kAcceptPoster, D::kReject, D::kAcceptOral, D::kReject}),
      -25.0);
  EXPECT_THROW(acceptance_rate_delta({}, {}), Error);
  EXPECT_DOUBLE_EQ(mean_delta(pair_runs({{"a", 8}, {"b", 6}}, {{"a", 7}, {"b", 6}}, "x")), -0.5);
  EXPECT_DOUBLE_EQ(mean_delta(samples_from({3, 4}, {3, 4})), 0.0);
}

}  // namespace
}  // namespace rp::stats
