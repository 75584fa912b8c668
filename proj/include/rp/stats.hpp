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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/roles.hpp"

namespace rp::stats {

struct Pair {
  std::string bundle_id;
  double baseline = 0.0;
  double perturbed = 0.0;
};

/// Inner join of two runs on bundle id, sorted by id.
struct PairedSamples {
  std::string metric;
  std::vector<Pair> pairs;
  std::size_t baseline_only = 0;
  std::size_t perturbed_only = 0;

  /// d_i = baseline - perturbed, recomputed on every call.
  std::vector<double> differences() const;
  /// perturbed - baseline.
  std::vector<double> shifts() const;
};

/// Throws kEmptyIntersection when no bundle appears in both runs.
PairedSamples pair_runs(const std::map<std::string, double>& baseline,
                        const std::map<std::string, double>& perturbed,
                        std::string metric);

enum class WilcoxonMethod { kExact, kNormal };

std::string_view to_string(WilcoxonMethod m);

struct WilcoxonResult {
  std::size_t n_nonzero = 0;
  double w_plus = 0.0;
  double w_minus = 0.0;
  WilcoxonMethod method = WilcoxonMethod::kExact;
  std::optional<double> z;
  double p_greater = 1.0;  // evidence that d tends positive
  double p_less = 1.0;     // evidence that d tends negative
};

inline constexpr std::size_t kDefaultExactThreshold = 20;

/// Zeros dropped, ties given average ranks. Exact null distribution for
/// N <= exact_threshold, normal approximation without continuity or tie
/// correction above it.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& d,
                                    std::size_t exact_threshold = kDefaultExactThreshold);

/// On samples.differences().
WilcoxonResult wilcoxon_signed_rank(const PairedSamples& samples,
                                    std::size_t exact_threshold = kDefaultExactThreshold);

struct TostResult {
  std::size_t n = 0;
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double standard_error = 0.0;
  double margin = 0.0;
  double t_lower = 0.0;  // +-inf when the standard error is zero
  double t_upper = 0.0;
  double critical_t = 0.0;  // NaN for a single sample
  bool equivalent = false;
};

/// Two one-sided t tests of |mean(d)| < margin. A zero standard deviation
/// is equivalent iff |mean| < margin. Throws kTooFewSamples.
TostResult tost_equivalence(const std::vector<double>& d, double margin, double alpha);

/// Upper-alpha quantile of Student's t with df degrees of freedom.
double t_critical(double alpha, double df);

enum class Verdict { kIncrease, kDecrease, kInvariance, kInconclusive };

std::string_view to_string(Verdict v);
Verdict parse_verdict(std::string_view s);

struct TestVerdict {
  Verdict value = Verdict::kInconclusive;
  WilcoxonResult wilcoxon;
  std::optional<TostResult> tost;
  double alpha = 0.05;
  double margin = 0.0;
};

/// Directional Wilcoxon on perturbed - baseline, then TOST when neither
/// direction is significant.
TestVerdict classify_outcome(const PairedSamples& samples, double margin,
                             double alpha,
                             std::size_t exact_threshold = kDefaultExactThreshold);

// Decisions -----------------------------------------------------------------

enum class MappingScheme { kSimple, kProportional };

std::string_view to_string(MappingScheme s);
MappingScheme parse_mapping(std::string_view s);

/// Accepted categories map to 1 (poster), 1 + spotlight, 1 + oral.
struct DecisionWeights {
  double spotlight = 1.0;
  double oral = 2.0;
};

/// Inverse frequency relative to posters; the ordinal weights when the
/// decisions lack posters, spotlights or orals.
DecisionWeights proportional_weights(const std::vector<roles::FinalDecision>& baseline);

double map_decision(roles::FinalDecision d, MappingScheme scheme,
                    const DecisionWeights& weights = {});

/// Throws kLengthMismatch or kEmptyInput.
double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
double cohen_kappa(const std::vector<roles::FinalDecision>& a,
                   const std::vector<roles::FinalDecision>& b);

using CountMatrix = std::vector<std::vector<std::size_t>>;

/// Rows index `before`, columns `after`. Throws kUnknownCategory or
/// kLengthMismatch.
CountMatrix transition_matrix(const std::vector<std::string>& before,
                              const std::vector<std::string>& after,
                              const std::vector<std::string>& order);

std::vector<std::string> decision_order();
std::vector<std::string> decision_ids(const std::vector<roles::FinalDecision>& d);

/// 100 * (acceptance(after) - acceptance(before)).
double acceptance_rate_delta(const std::vector<roles::FinalDecision>& before,
                             const std::vector<roles::FinalDecision>& after);

/// Mean of perturbed - baseline in bundle-id order. Throws kEmptyInput.
double mean_delta(const PairedSamples& samples);

// Serialization -------------------------------------------------------------

/// Non-finite numbers are written as null.
nlohmann::ordered_json to_json(const WilcoxonResult& w);
nlohmann::ordered_json to_json(const TostResult& t);
nlohmann::ordered_json to_json(const TestVerdict& v);
nlohmann::ordered_json to_json(const PairedSamples& s);

}  // namespace rp::stats
