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

#include "rp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "rp/error.hpp"

namespace rp::stats {

using nlohmann::ordered_json;

std::vector<double> PairedSamples::differences() const {
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto& p : pairs) d.push_back(p.baseline - p.perturbed);
  return d;
}

std::vector<double> PairedSamples::shifts() const {
  std::vector<double> d;
  d.reserve(pairs.size());
  for (const auto& p : pairs) d.push_back(p.perturbed - p.baseline);
  return d;
}

PairedSamples pair_runs(const std::map<std::string, double>& baseline,
                        const std::map<std::string, double>& perturbed,
                        std::string metric) {
  PairedSamples s;
  s.metric = std::move(metric);
  for (const auto& [id, b] : baseline) {
    const auto it = perturbed.find(id);
    if (it == perturbed.end()) {
      ++s.baseline_only;
    } else {
      s.pairs.push_back({id, b, it->second});
    }
  }
  s.perturbed_only = perturbed.size() - s.pairs.size();
  if (s.pairs.empty()) {
    throw Error(ErrorCode::kEmptyIntersection,
                "no bundle has both a baseline and a perturbed " + s.metric);
  }
  return s;
}

std::string_view to_string(WilcoxonMethod m) {
  return m == WilcoxonMethod::kExact ? "exact" : "normal";
}

namespace {

// Average ranks of |d|, doubled so ties stay integral.
std::vector<std::uint32_t> doubled_ranks(const std::vector<double>& abs_d) {
  std::vector<std::size_t> order(abs_d.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return abs_d[a] < abs_d[b]; });
  std::vector<std::uint32_t> ranks(abs_d.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && abs_d[order[j + 1]] == abs_d[order[i]]) ++j;
    // ranks i+1..j+1 averaged, doubled: (i+1)+(j+1)
    const auto r2 = static_cast<std::uint32_t>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r2;
    i = j + 1;
  }
  return ranks;
}

double upper_normal(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& d,
                                    std::size_t exact_threshold) {
  std::vector<double> abs_d;
  std::vector<bool> positive;
  for (double v : d) {
    if (v == 0.0) continue;
    abs_d.push_back(std::fabs(v));
    positive.push_back(v > 0.0);
  }
  WilcoxonResult r;
  r.n_nonzero = abs_d.size();
  if (r.n_nonzero == 0) return r;

  const auto ranks = doubled_ranks(abs_d);
  std::uint64_t w2_plus = 0;
  std::uint64_t w2_total = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    w2_total += ranks[i];
    if (positive[i]) w2_plus += ranks[i];
  }
  r.w_plus = static_cast<double>(w2_plus) / 2.0;
  r.w_minus = static_cast<double>(w2_total - w2_plus) / 2.0;
  const double n = static_cast<double>(r.n_nonzero);

  if (r.n_nonzero <= exact_threshold) {
    r.method = WilcoxonMethod::kExact;
    // counts[s]: sign assignments whose positive doubled-rank sum is s
    std::vector<std::uint64_t> counts(w2_total + 1, 0);
    counts[0] = 1;
    std::uint64_t reach = 0;
    for (auto rank : ranks) {
      reach += rank;
      for (std::uint64_t s = reach; s >= rank; --s) counts[s] += counts[s - rank];
    }
    std::uint64_t ge = 0;
    std::uint64_t le = 0;
    for (std::uint64_t s = 0; s <= w2_total; ++s) {
      if (s >= w2_plus) ge += counts[s];
      if (s <= w2_plus) le += counts[s];
    }
    const double total = std::ldexp(1.0, static_cast<int>(r.n_nonzero));
    r.p_greater = static_cast<double>(ge) / total;
    r.p_less = static_cast<double>(le) / total;
  } else {
    r.method = WilcoxonMethod::kNormal;
    const double mean = n * (n + 1.0) / 4.0;
    const double sd = std::sqrt(n * (n + 1.0) * (2.0 * n + 1.0) / 24.0);
    const double z = (r.w_plus - mean) / sd;
    r.z = z;
    r.p_greater = upper_normal(z);
    r.p_less = upper_normal(-z);
  }
  return r;
}

WilcoxonResult wilcoxon_signed_rank(const PairedSamples& samples,
                                    std::size_t exact_threshold) {
  return wilcoxon_signed_rank(samples.differences(), exact_threshold);
}

double t_critical(double alpha, double df) {
  boost::math::students_t dist(df);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

TostResult tost_equivalence(const std::vector<double>& d, double margin, double alpha) {
  TostResult t;
  t.n = d.size();
  t.margin = margin;
  if (t.n == 0) throw Error(ErrorCode::kTooFewSamples, "TOST needs at least one pair");
  double sum = 0.0;
  for (double v : d) sum += v;
  t.mean_diff = sum / static_cast<double>(t.n);
  double ss = 0.0;
  for (double v : d) ss += (v - t.mean_diff) * (v - t.mean_diff);
  if (t.n == 1) {
    if (t.mean_diff != 0.0) {
      throw Error(ErrorCode::kTooFewSamples,
                  "TOST with one nonzero difference has no variance estimate");
    }
    t.sd_diff = 0.0;
    t.critical_t = std::numeric_limits<double>::quiet_NaN();
  } else {
    t.sd_diff = std::sqrt(ss / static_cast<double>(t.n - 1));
    t.critical_t = t_critical(alpha, static_cast<double>(t.n - 1));
  }
  t.standard_error = t.sd_diff / std::sqrt(static_cast<double>(t.n));
  if (t.standard_error == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    auto signed_inf = [inf](double x) { return x > 0 ? inf : x < 0 ? -inf : 0.0; };
    t.t_lower = signed_inf(t.mean_diff + margin);
    t.t_upper = signed_inf(t.mean_diff - margin);
    t.equivalent = std::fabs(t.mean_diff) < margin;
    return t;
  }
  t.t_lower = (t.mean_diff + margin) / t.standard_error;
  t.t_upper = (t.mean_diff - margin) / t.standard_error;
  t.equivalent = t.t_lower > t.critical_t && t.t_upper < -t.critical_t;
  return t;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::kIncrease: return "increase";
    case Verdict::kDecrease: return "decrease";
    case Verdict::kInvariance: return "invariance";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict parse_verdict(std::string_view s) {
  for (auto v : {Verdict::kIncrease, Verdict::kDecrease, Verdict::kInvariance,
                 Verdict::kInconclusive}) {
    if (to_string(v) == s) return v;
  }
  throw Error(ErrorCode::kUnknownCategory, "verdict '" + std::string(s) + "'");
}

TestVerdict classify_outcome(const PairedSamples& samples, double margin,
                             double alpha, std::size_t exact_threshold) {
  TestVerdict v;
  v.alpha = alpha;
  v.margin = margin;
  const auto shifts = samples.shifts();
  v.wilcoxon = wilcoxon_signed_rank(shifts, exact_threshold);
  if (v.wilcoxon.p_greater < alpha) {
    v.value = Verdict::kIncrease;
  } else if (v.wilcoxon.p_less < alpha) {
    v.value = Verdict::kDecrease;
  } else {
    v.tost = tost_equivalence(shifts, margin, alpha);
    v.value = v.tost->equivalent ? Verdict::kInvariance : Verdict::kInconclusive;
  }
  return v;
}

// Decisions -----------------------------------------------------------------

std::string_view to_string(MappingScheme s) {
  return s == MappingScheme::kSimple ? "simple" : "proportional";
}

MappingScheme parse_mapping(std::string_view s) {
  if (s == "simple") return MappingScheme::kSimple;
  if (s == "proportional") return MappingScheme::kProportional;
  throw Error(ErrorCode::kConfigError,
              "unknown decision mapping '" + std::string(s) + "' (simple or proportional)");
}

DecisionWeights proportional_weights(const std::vector<roles::FinalDecision>& baseline) {
  std::size_t poster = 0, spotlight = 0, oral = 0;
  for (auto d : baseline) {
    poster += d == roles::FinalDecision::kAcceptPoster;
    spotlight += d == roles::FinalDecision::kAcceptSpotlight;
    oral += d == roles::FinalDecision::kAcceptOral;
  }
  if (poster == 0 || spotlight == 0 || oral == 0) return {};
  const double p = static_cast<double>(poster);
  return {p / static_cast<double>(spotlight) - 1.0, p / static_cast<double>(oral) - 1.0};
}

double map_decision(roles::FinalDecision d, MappingScheme scheme,
                    const DecisionWeights& weights) {
  using roles::FinalDecision;
  if (scheme == MappingScheme::kSimple) {
    switch (d) {
      case FinalDecision::kReject: return 0.0;
      case FinalDecision::kAcceptPoster: return 1.0;
      case FinalDecision::kAcceptSpotlight: return 2.0;
      case FinalDecision::kAcceptOral: return 3.0;
    }
  }
  switch (d) {
    case FinalDecision::kReject: return 0.0;
    case FinalDecision::kAcceptPoster: return 1.0;
    case FinalDecision::kAcceptSpotlight: return 1.0 + weights.spotlight;
    case FinalDecision::kAcceptOral: return 1.0 + weights.oral;
  }
  return 0.0;
}

double cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kLengthMismatch, "kappa over vectors of different length");
  }
  if (a.empty()) throw Error(ErrorCode::kEmptyInput, "kappa over empty vectors");
  const double n = static_cast<double>(a.size());
  std::map<std::string, std::size_t> ca, cb;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    agree += a[i] == b[i];
  }
  const double po = static_cast<double>(agree) / n;
  double pe = 0.0;
  for (const auto& [label, count] : ca) {
    const auto it = cb.find(label);
    if (it != cb.end()) {
      pe += (static_cast<double>(count) / n) * (static_cast<double>(it->second) / n);
    }
  }
  if (pe == 1.0) return po == 1.0 ? 1.0 : 0.0;
  return (po - pe) / (1.0 - pe);
}

double cohen_kappa(const std::vector<roles::FinalDecision>& a,
                   const std::vector<roles::FinalDecision>& b) {
  return cohen_kappa(decision_ids(a), decision_ids(b));
}

CountMatrix transition_matrix(const std::vector<std::string>& before,
                              const std::vector<std::string>& after,
                              const std::vector<std::string>& order) {
  if (before.size() != after.size()) {
    throw Error(ErrorCode::kLengthMismatch, "transition over vectors of different length");
  }
  auto index = [&](const std::string& c) {
    const auto it = std::find(order.begin(), order.end(), c);
    if (it == order.end()) {
      throw Error(ErrorCode::kUnknownCategory, "category '" + c + "' not in the order");
    }
    return static_cast<std::size_t>(it - order.begin());
  };
  CountMatrix m(order.size(), std::vector<std::size_t>(order.size(), 0));
  for (std::size_t k = 0; k < before.size(); ++k) ++m[index(before[k])][index(after[k])];
  return m;
}

std::vector<std::string> decision_order() {
  std::vector<std::string> out;
  for (auto d : roles::kAllDecisions) out.emplace_back(roles::to_string(d));
  return out;
}

std::vector<std::string> decision_ids(const std::vector<roles::FinalDecision>& d) {
  std::vector<std::string> out;
  out.reserve(d.size());
  for (auto x : d) out.emplace_back(roles::to_string(x));
  return out;
}

double acceptance_rate_delta(const std::vector<roles::FinalDecision>& before,
                             const std::vector<roles::FinalDecision>& after) {
  if (before.size() != after.size()) {
    throw Error(ErrorCode::kLengthMismatch, "decision vectors differ in length");
  }
  if (before.empty()) throw Error(ErrorCode::kEmptyInput, "no decisions");
  auto rate = [](const std::vector<roles::FinalDecision>& v) {
    const auto acc = std::count_if(v.begin(), v.end(), roles::is_accept);
    return static_cast<double>(acc) / static_cast<double>(v.size());
  };
  return 100.0 * (rate(after) - rate(before));
}

double mean_delta(const PairedSamples& samples) {
  if (samples.pairs.empty()) throw Error(ErrorCode::kEmptyInput, "no pairs");
  double sum = 0.0;
  for (double v : samples.shifts()) sum += v;
  return sum / static_cast<double>(samples.pairs.size());
}

// Serialization -------------------------------------------------------------

namespace {

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(); }

}  // namespace

ordered_json to_json(const WilcoxonResult& w) {
  ordered_json j;
  j["n_nonzero"] = w.n_nonzero;
  j["w_plus"] = w.w_plus;
  j["w_minus"] = w.w_minus;
  j["method"] = std::string(to_string(w.method));
  j["z"] = w.z ? num(*w.z) : ordered_json();
  j["p_greater"] = w.p_greater;
  j["p_less"] = w.p_less;
  return j;
}

ordered_json to_json(const TostResult& t) {
  ordered_json j;
  j["n"] = t.n;
  j["mean_diff"] = t.mean_diff;
  j["sd_diff"] = t.sd_diff;
  j["standard_error"] = t.standard_error;
  j["margin"] = t.margin;
  j["t_lower"] = num(t.t_lower);
  j["t_upper"] = num(t.t_upper);
  j["critical_t"] = num(t.critical_t);
  j["equivalent"] = t.equivalent;
  return j;
}

ordered_json to_json(const TestVerdict& v) {
  ordered_json j;
  j["value"] = std::string(to_string(v.value));
  j["alpha"] = v.alpha;
  j["margin"] = v.margin;
  j["wilcoxon"] = to_json(v.wilcoxon);
  j["tost"] = v.tost ? to_json(*v.tost) : ordered_json();
  return j;
}

ordered_json to_json(const PairedSamples& s) {
  ordered_json j;
  j["metric"] = s.metric;
  j["n"] = s.pairs.size();
  j["baseline_only"] = s.baseline_only;
  j["perturbed_only"] = s.perturbed_only;
  ordered_json pairs = ordered_json::array();
  for (const auto& p : s.pairs) {
    pairs.push_back({{"bundle_id", p.bundle_id},
                     {"baseline", p.baseline},
                     {"perturbed", p.perturbed}});
  }
  j["pairs"] = std::move(pairs);
  return j;
}

}  // namespace rp::stats
