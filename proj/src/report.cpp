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

#include "rp/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/text.hpp"

namespace rp::report {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return text::format_number(v); }

std::string svg_open(int width, int height) {
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << " " << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  return o.str();
}

std::string shade(double t) {
  const int v = static_cast<int>(std::lround(255.0 - 190.0 * std::clamp(t, 0.0, 1.0)));
  std::ostringstream o;
  o << "rgb(" << v << "," << v << ",255)";
  return o.str();
}

}  // namespace

std::vector<int> intensities(const std::vector<double>& values) {
  double max = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) max = std::max(max, std::abs(v));
  }
  std::vector<int> out;
  out.reserve(values.size());
  for (double v : values) {
    out.push_back(max == 0.0 || !std::isfinite(v)
                      ? 0
                      : static_cast<int>(std::lround(100.0 * std::abs(v) / max)));
  }
  return out;
}

// Charts ----------------------------------------------------------------------

std::string render_heatmap(const stats::CountMatrix& matrix, const std::vector<std::string>& order,
                           std::string_view title) {
  const std::size_t k = order.size();
  if (matrix.size() != k) {
    throw Error(ErrorCode::kShapeMismatch, "heatmap has " + std::to_string(matrix.size()) +
                                               " rows for " + std::to_string(k) + " categories");
  }
  std::size_t max = 0;
  for (const auto& row : matrix) {
    if (row.size() != k) {
      throw Error(ErrorCode::kShapeMismatch, "heatmap row has " + std::to_string(row.size()) +
                                                 " columns for " + std::to_string(k) +
                                                 " categories");
    }
    for (auto c : row) max = std::max(max, c);
  }
  const int cell = 48, left = 120, top = 96 + (title.empty() ? 0 : 20);
  const int width = left + static_cast<int>(k) * cell + 80;
  const int height = top + static_cast<int>(k) * cell + 40;
  std::ostringstream o;
  o << svg_open(width, height);
  if (!title.empty()) {
    o << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << xml_escape(title) << "</text>\n";
  }
  for (std::size_t j = 0; j < k; ++j) {
    const int x = left + static_cast<int>(j) * cell + cell / 2;
    o << "<text x=\"" << x << "\" y=\"" << top - 6 << "\" text-anchor=\"start\" font-size=\"9\" "
      << "transform=\"rotate(-40 " << x << " " << top - 6 << ")\">" << xml_escape(order[j])
      << "</text>\n";
  }
  for (std::size_t i = 0; i < k; ++i) {
    const int y = top + static_cast<int>(i) * cell;
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + cell / 2 + 4
      << "\" text-anchor=\"end\" font-size=\"9\">" << xml_escape(order[i]) << "</text>\n";
    for (std::size_t j = 0; j < k; ++j) {
      const int x = left + static_cast<int>(j) * cell;
      const double t = max == 0 ? 0.0 : static_cast<double>(matrix[i][j]) / static_cast<double>(max);
      o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
        << "\" fill=\"" << shade(t) << "\" stroke=\"#999\"/>\n";
      o << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"middle\">" << matrix[i][j] << "</text>\n";
    }
  }
  o << "<text x=\"" << left + static_cast<int>(k) * cell / 2 << "\" y=\"" << height - 12
    << "\" text-anchor=\"middle\">after</text>\n";
  o << "<text x=\"12\" y=\"" << top + static_cast<int>(k) * cell / 2
    << "\" text-anchor=\"middle\" transform=\"rotate(-90 12 " << top + static_cast<int>(k) * cell / 2
    << ")\">before</text>\n";
  o << "</svg>\n";
  return o.str();
}

std::string render_bars(const std::vector<Bar>& bars, std::string_view title) {
  double max = 0.0;
  for (const auto& b : bars) max = std::max(max, std::abs(b.value));
  if (max == 0.0) max = 1.0;
  // pad keeps the value labels of the longest negative bars off the row labels
  const int row = 18, left = 230, pad = 56, half = 180, top = 34;
  const int width = left + pad + 2 * half + 60;
  const int height = top + static_cast<int>(bars.size()) * row + 20;
  const int axis = left + pad + half;
  std::ostringstream o;
  o << svg_open(width, height);
  o << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int y = top + static_cast<int>(i) * row;
    const double len = half * bars[i].value / max;
    const long w = std::lround(std::abs(len));
    const long x = bars[i].value < 0 ? axis - w : axis;
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 12 << "\" text-anchor=\"end\">"
      << xml_escape(bars[i].label) << "</text>\n";
    o << "<rect x=\"" << x << "\" y=\"" << y + 2 << "\" width=\"" << w << "\" height=\"" << row - 4
      << "\" fill=\"" << (bars[i].value < 0 ? "#c0504d" : "#4f81bd") << "\"/>\n";
    o << "<text x=\"" << (bars[i].value < 0 ? x - 4 : x + w + 4) << "\" y=\"" << y + 12
      << "\" text-anchor=\"" << (bars[i].value < 0 ? "end" : "start") << "\">"
      << text::format_fixed2(bars[i].value) << "</text>\n";
  }
  o << "<line x1=\"" << axis << "\" y1=\"" << top << "\" x2=\"" << axis << "\" y2=\""
    << height - 20 << "\" stroke=\"black\"/>\n";
  o << "</svg>\n";
  return o.str();
}

std::string render_strips(const std::vector<Strip>& strips, std::string_view title) {
  double max = 0.0;
  for (const auto& s : strips) {
    for (double v : s.values) max = std::max(max, std::abs(v));
  }
  if (max == 0.0) max = 1.0;
  const int row = 18, left = 260, half = 160, top = 34;
  const int width = left + 2 * half + 30;
  const int bottom = top + static_cast<int>(strips.size()) * row;
  const int height = bottom + 40;
  const int axis = left + half;
  std::ostringstream o;
  o << svg_open(width, height);
  o << "<text x=\"" << width / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
    << xml_escape(title) << "</text>\n";
  o << "<line x1=\"" << axis << "\" y1=\"" << top << "\" x2=\"" << axis << "\" y2=\""
    << bottom << "\" stroke=\"#999\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << left + 2 * half
    << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  for (int k = -1; k <= 1; ++k) {
    const int x = axis + k * half;
    o << "<line x1=\"" << x << "\" y1=\"" << bottom << "\" x2=\"" << x << "\" y2=\"" << bottom + 4
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << x << "\" y=\"" << bottom + 16 << "\" text-anchor=\"middle\">"
      << text::format_number(k * max) << "</text>\n";
  }
  for (std::size_t i = 0; i < strips.size(); ++i) {
    const int y = top + static_cast<int>(i) * row + row / 2;
    o << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
      << xml_escape(strips[i].label) << "</text>\n";
    for (double v : strips[i].values) {
      o << "<circle cx=\"" << std::lround(axis + half * v / max) << "\" cy=\"" << y
        << "\" r=\"3\" fill=\"#4f81bd\" fill-opacity=\"0.6\"/>\n";
    }
  }
  o << "</svg>\n";
  return o.str();
}

// Manifest ------------------------------------------------------------------

ordered_json stable_manifest(const json& manifest) {
  ordered_json j = ordered_json::parse(manifest.dump());
  for (const char* key : {"run_id", "started_at", "updated_at", "paths", "provider"}) j.erase(key);
  if (j.contains("config")) {
    j["config"].erase("corpus");
    if (j["config"].contains("provider")) j["config"]["provider"].erase("mock_script");
  }
  if (j.contains("calls")) {
    for (auto& c : j["calls"]) c.erase("from_cache");
  }
  return j;
}

// Report ----------------------------------------------------------------------

namespace {

struct Tables {
  std::map<std::string, std::string> files;  // relative path -> bytes
  void put(const std::string& rel, std::string bytes) { files[rel] = std::move(bytes); }
};

std::string csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& r : rows) out += text::csv_row(r);
  return out;
}

std::string opt_num(const json& v) { return v.is_number() ? num(v.get<double>()) : ""; }
std::string opt_fixed(const json& v) {
  return v.is_number() ? text::format_fixed2(v.get<double>()) : "";
}
double value_or_nan(const json& v) { return v.is_number() ? v.get<double>() : std::nan(""); }

std::string verdict_of(const json& metric) {
  return metric.at("verdict").is_null() ? "n/a" : metric["verdict"]["value"].get<std::string>();
}

const json* find_metric(const json& analysis, std::string_view name) {
  for (const auto& m : analysis.at("metrics")) {
    if (m.at("metric").get<std::string>() == name) return &m;
  }
  return nullptr;
}

std::vector<std::string> test_columns(const json& m) {
  const json& v = m.at("verdict");
  if (v.is_null()) return {"", "", "", "", "", "", "", "", ""};
  const json& w = v["wilcoxon"];
  const json& t = v["tost"];
  return {num(w["w_plus"].get<double>()),
          num(w["w_minus"].get<double>()),
          w["method"].get<std::string>(),
          num(w["p_greater"].get<double>()),
          num(w["p_less"].get<double>()),
          t.is_null() ? "" : opt_num(t["t_lower"]),
          t.is_null() ? "" : opt_num(t["t_upper"]),
          t.is_null() ? "" : opt_num(t["critical_t"]),
          t.is_null() ? "" : (t["equivalent"].get<bool>() ? "true" : "false")};
}

const std::vector<std::string> kTestHeader = {
    "w_plus", "w_minus", "method", "p_greater", "p_less",
    "tost_t_lower", "tost_t_upper", "tost_critical_t", "tost_equivalent"};

}  // namespace

void build_report(const fs::path& run_dir, const fs::path& out_dir,
                  const std::vector<PerturbationAspect>& aspects,
                  const std::vector<roles::CotVariant>& variants) {
  if (aspects.empty()) throw Error(ErrorCode::kMissingAnalysis, "no aspects requested");
  if (variants.empty()) throw Error(ErrorCode::kMissingAnalysis, "no variants requested");

  const fs::path manifest_path = run_dir / "run_manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kMissingAnalysis, "missing " + manifest_path.string());
  }

  // Requested order: taxonomy order, grid variant order.
  std::vector<PerturbationAspect> rows;
  for (const auto& a : kAllAspects) {
    if (std::find(aspects.begin(), aspects.end(), a) != aspects.end()) rows.push_back(a);
  }
  std::vector<roles::CotVariant> cols;
  for (auto v : kGridVariants) {
    if (std::find(variants.begin(), variants.end(), v) != variants.end()) cols.push_back(v);
  }

  auto load = [&](const PerturbationAspect& a, const std::string& variant) {
    const fs::path p = run_dir / "analysis" / (a.name() + "." + variant + ".json");
    if (!fs::exists(p)) throw Error(ErrorCode::kMissingAnalysis, "missing " + p.string());
    return io::read_json(p);
  };
  std::map<std::string, json> reviewer;
  std::map<std::pair<std::string, std::string>, json> meta;
  for (const auto& a : rows) {
    if (a.mode == Mode::kPaper) reviewer[a.name()] = load(a, "reviewer");
    for (auto v : cols) meta[{a.name(), std::string(roles::to_string(v))}] = load(a, std::string(roles::to_string(v)));
  }

  Tables out;

  // Reviewer deltas and tests.
  {
    std::vector<std::vector<std::string>> deltas{{"mode", "aspect", "score_column", "n",
                                                  "mean_delta", "mean_delta_2dp", "intensity",
                                                  "verdict"}};
    auto test_header = std::vector<std::string>{"mode", "aspect", "score_column", "n"};
    test_header.insert(test_header.end(), kTestHeader.begin(), kTestHeader.end());
    test_header.push_back("verdict");
    std::vector<std::vector<std::string>> tests{test_header};
    std::vector<double> values;
    std::vector<std::vector<std::string>> body;
    for (const auto& a : rows) {
      if (a.mode != Mode::kPaper) continue;
      for (const auto& m : reviewer[a.name()]["metrics"]) {
        values.push_back(value_or_nan(m["mean_delta"]));
        body.push_back({"paper", std::string(to_string(a.kind)), m["metric"].get<std::string>(),
                        std::to_string(m["n"].get<std::size_t>()), opt_num(m["mean_delta"]),
                        opt_fixed(m["mean_delta"]), "", verdict_of(m)});
        auto t = std::vector<std::string>{"paper", std::string(to_string(a.kind)),
                                          m["metric"].get<std::string>(),
                                          std::to_string(m["n"].get<std::size_t>())};
        const auto cols_t = test_columns(m);
        t.insert(t.end(), cols_t.begin(), cols_t.end());
        t.push_back(verdict_of(m));
        tests.push_back(std::move(t));
      }
    }
    const auto inten = intensities(values);
    for (std::size_t i = 0; i < body.size(); ++i) {
      body[i][6] = std::to_string(inten[i]);
      deltas.push_back(body[i]);
    }
    out.put("tables/reviewer_deltas.csv", csv(deltas));
    out.put("tables/reviewer_tests.csv", csv(tests));
  }

  // Meta long-form deltas and tests.
  {
    std::vector<std::vector<std::string>> deltas{{"mode", "aspect", "cot_variant", "metric", "n",
                                                  "mean_delta", "mean_delta_2dp", "intensity",
                                                  "verdict"}};
    auto test_header = std::vector<std::string>{"mode", "aspect", "cot_variant", "metric", "n"};
    test_header.insert(test_header.end(), kTestHeader.begin(), kTestHeader.end());
    test_header.push_back("verdict");
    std::vector<std::vector<std::string>> tests{test_header};
    std::map<std::string, std::vector<std::size_t>> by_metric;
    std::vector<double> values;
    std::vector<std::vector<std::string>> body;
    for (const auto& a : rows) {
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        for (const auto& m : meta[{a.name(), vn}]["metrics"]) {
          const std::string metric = m["metric"].get<std::string>();
          by_metric[metric].push_back(body.size());
          values.push_back(value_or_nan(m["mean_delta"]));
          body.push_back({std::string(to_string(a.mode)), std::string(to_string(a.kind)), vn,
                          metric, std::to_string(m["n"].get<std::size_t>()),
                          opt_num(m["mean_delta"]), opt_fixed(m["mean_delta"]), "",
                          verdict_of(m)});
          auto t = std::vector<std::string>{std::string(to_string(a.mode)),
                                            std::string(to_string(a.kind)), vn, metric,
                                            std::to_string(m["n"].get<std::size_t>())};
          const auto cols_t = test_columns(m);
          t.insert(t.end(), cols_t.begin(), cols_t.end());
          t.push_back(verdict_of(m));
          tests.push_back(std::move(t));
        }
      }
    }
    // Intensity is normalized within each metric.
    for (const auto& [metric, idx] : by_metric) {
      std::vector<double> vs;
      for (auto i : idx) vs.push_back(values[i]);
      const auto inten = intensities(vs);
      for (std::size_t k = 0; k < idx.size(); ++k) body[idx[k]][7] = std::to_string(inten[k]);
    }
    for (auto& r : body) deltas.push_back(std::move(r));
    out.put("tables/meta_deltas.csv", csv(deltas));
    out.put("tables/meta_tests.csv", csv(tests));
  }

  // Aspect x variant grids.
  auto grid = [&](const std::string& rel, auto cell_value) {
    std::vector<std::string> header{"mode", "aspect"};
    for (auto v : cols) {
      const std::string vn(roles::to_string(v));
      header.insert(header.end(), {vn, vn + "_2dp", vn + "_intensity"});
    }
    std::vector<double> values;
    for (const auto& a : rows) {
      for (auto v : cols) values.push_back(cell_value(meta[{a.name(), std::string(roles::to_string(v))}]));
    }
    const auto inten = intensities(values);
    std::vector<std::vector<std::string>> table{header};
    std::size_t k = 0;
    for (const auto& a : rows) {
      std::vector<std::string> r{std::string(to_string(a.mode)), std::string(to_string(a.kind))};
      for (std::size_t c = 0; c < cols.size(); ++c, ++k) {
        const double x = values[k];
        r.push_back(std::isnan(x) ? "" : num(x));
        r.push_back(std::isnan(x) ? "" : text::format_fixed2(x));
        r.push_back(std::to_string(inten[k]));
      }
      table.push_back(std::move(r));
    }
    out.put(rel, csv(table));
  };
  auto metric_delta = [](std::string_view metric) {
    return [metric](const json& analysis) {
      const json* m = find_metric(analysis, metric);
      return m ? value_or_nan((*m)["mean_delta"]) : std::nan("");
    };
  };
  grid("tables/meta_overall_delta_grid.csv", metric_delta("overall_score"));
  grid("tables/meta_decision_delta_grid.csv", metric_delta("final_decision"));
  grid("tables/decision_kappa_grid.csv",
       [](const json& a) { return value_or_nan(a["decisions"]["kappa"]); });
  grid("tables/acceptance_delta_grid.csv",
       [](const json& a) { return value_or_nan(a["decisions"]["acceptance_rate_delta"]); });

  // Verdict grid: one row per aspect, decision and overall per variant.
  ordered_json meta_grid_json;
  std::map<std::string, std::size_t> verdict_counts{
      {"increase", 0}, {"decrease", 0}, {"invariance", 0}, {"inconclusive", 0}, {"n/a", 0}};
  {
    std::vector<std::string> header{"mode", "aspect"};
    for (auto v : cols) {
      const std::string vn(roles::to_string(v));
      header.push_back(vn + "_final_decision");
      header.push_back(vn + "_overall_score");
    }
    std::vector<std::vector<std::string>> table{header};
    for (const auto& a : rows) {
      std::vector<std::string> r{std::string(to_string(a.mode)), std::string(to_string(a.kind))};
      ordered_json row_json;
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        const auto& analysis = meta[{a.name(), vn}];
        const json* fd = find_metric(analysis, "final_decision");
        const json* ov = find_metric(analysis, "overall_score");
        const std::string fdv = fd ? verdict_of(*fd) : "n/a";
        const std::string ovv = ov ? verdict_of(*ov) : "n/a";
        r.push_back(fdv);
        r.push_back(ovv);
        ++verdict_counts[fdv];
        ++verdict_counts[ovv];
        row_json[vn] = {{"final_decision", fdv}, {"overall_score", ovv}};
      }
      meta_grid_json[a.name()] = row_json;
      table.push_back(std::move(r));
    }
    out.put("tables/meta_verdict_grid.csv", csv(table));
  }
  ordered_json reviewer_grid_json;
  for (const auto& a : rows) {
    if (a.mode != Mode::kPaper) continue;
    ordered_json r;
    for (const auto& m : reviewer[a.name()]["metrics"]) {
      const std::string v = verdict_of(m);
      r[m["metric"].get<std::string>()] = v;
      ++verdict_counts[v];
    }
    reviewer_grid_json[a.name()] = r;
  }

  // Decision distribution per arm and variant.
  {
    std::vector<std::vector<std::string>> table{{"arm", "cot_variant", "n", "reject",
                                                 "accept_poster", "accept_spotlight",
                                                 "accept_oral", "acceptance_rate"}};
    auto row_for = [&](const std::string& arm, const std::string& vn, const json& ids) {
      std::map<std::string, std::size_t> counts;
      for (const auto& d : ids) ++counts[d.get<std::string>()];
      const std::size_t n = ids.size();
      const std::size_t rejects = counts["reject"];
      table.push_back({arm, vn, std::to_string(n), std::to_string(rejects),
                       std::to_string(counts["accept_poster"]),
                       std::to_string(counts["accept_spotlight"]),
                       std::to_string(counts["accept_oral"]),
                       n == 0 ? "" : num(100.0 * static_cast<double>(n - rejects) /
                                         static_cast<double>(n))});
    };
    for (auto v : cols) {
      const std::string vn(roles::to_string(v));
      // Baseline decisions of the first aspect's pairing cover the paired set.
      row_for("baseline", vn, meta[{rows.front().name(), vn}]["decisions"]["baseline"]);
    }
    for (const auto& a : rows) {
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        row_for(a.name(), vn, meta[{a.name(), vn}]["decisions"]["perturbed"]);
      }
    }
    out.put("tables/decision_distribution.csv", csv(table));
  }

  // Exclusions.
  ordered_json excluded_json;
  std::size_t excluded_total = 0;
  {
    std::vector<std::vector<std::string>> table{{"aspect", "role", "cot_variant", "perturb",
                                                 "baseline_role", "perturbed_role",
                                                 "baseline_only", "perturbed_only"}};
    auto add = [&](const PerturbationAspect& a, const std::string& role, const std::string& vn,
                   const json& analysis) {
      const json& ex = analysis["excluded"];
      const json* m = find_metric(analysis, "overall_score");
      const std::size_t bo = m ? (*m)["baseline_only"].get<std::size_t>() : 0;
      const std::size_t po = m ? (*m)["perturbed_only"].get<std::size_t>() : 0;
      table.push_back({a.name(), role, vn, std::to_string(ex["perturb"].get<std::size_t>()),
                       std::to_string(ex["baseline_role"].get<std::size_t>()),
                       std::to_string(ex["perturbed_role"].get<std::size_t>()),
                       std::to_string(bo), std::to_string(po)});
      excluded_json[a.name()][vn] = {{"perturb", ex["perturb"].get<std::size_t>()},
                                     {"baseline_role", ex["baseline_role"].get<std::size_t>()},
                                     {"perturbed_role", ex["perturbed_role"].get<std::size_t>()},
                                     {"baseline_only", bo},
                                     {"perturbed_only", po}};
      excluded_total += bo + po;
    };
    for (const auto& a : rows) {
      if (a.mode == Mode::kPaper) add(a, "reviewer", "reviewer", reviewer[a.name()]);
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        add(a, "meta", vn, meta[{a.name(), vn}]);
      }
    }
    out.put("tables/exclusions.csv", csv(table));
  }

  // Perturbation statistics, when the run produced them.
  ordered_json perturb_json;
  if (const fs::path p = run_dir / "perturbation_stats.json"; fs::exists(p)) {
    const json stats = io::read_json(p);
    std::vector<std::vector<std::string>> table{
        {"aspect", "bundles", "sum", "mean", "mean_2dp", "min", "max"}};
    for (const auto& r : stats["aspects"]) {
      table.push_back({r["aspect"].get<std::string>(),
                       std::to_string(r["bundles"].get<std::size_t>()),
                       std::to_string(r["sum"].get<std::size_t>()), num(r["mean"].get<double>()),
                       text::format_fixed2(r["mean"].get<double>()),
                       std::to_string(r["min"].get<std::size_t>()),
                       std::to_string(r["max"].get<std::size_t>())});
    }
    out.put("tables/perturbation_stats.csv", csv(table));
    perturb_json = ordered_json::parse(stats["aspects"].dump());
  }

  // Figures.
  {
    std::vector<std::vector<std::string>> data{
        {"mode", "aspect", "cot_variant", "acceptance_rate_delta"}};
    std::vector<Bar> bars;
    for (const auto& a : rows) {
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        const json& d = meta[{a.name(), vn}]["decisions"]["acceptance_rate_delta"];
        data.push_back({std::string(to_string(a.mode)), std::string(to_string(a.kind)), vn,
                        opt_num(d)});
        bars.push_back({a.name() + " (" + vn + ")", d.is_number() ? d.get<double>() : 0.0});
      }
    }
    out.put("figures/acceptance_delta_bars.csv", csv(data));
    out.put("figures/acceptance_delta_bars.svg",
            render_bars(bars, "Acceptance rate difference (perturbed - baseline), points"));
  }
  for (const auto& a : rows) {
    for (auto v : cols) {
      const std::string vn(roles::to_string(v));
      const json& d = meta[{a.name(), vn}]["decisions"];
      if (d["transition_matrix"].is_null()) continue;
      const auto order = d["order"].get<std::vector<std::string>>();
      const auto m = d["transition_matrix"].get<stats::CountMatrix>();
      std::vector<std::vector<std::string>> data{{"before", "after", "count"}};
      for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = 0; j < order.size(); ++j) {
          data.push_back({order[i], order[j], std::to_string(m[i][j])});
        }
      }
      const std::string stem = "figures/transition_" + a.name() + "." + vn;
      out.put(stem + ".csv", csv(data));
      out.put(stem + ".svg", render_heatmap(m, order, a.name() + " / " + vn));
    }
  }
  {
    std::vector<std::vector<std::string>> data{
        {"role", "aspect", "cot_variant", "metric", "bundle_id", "baseline", "perturbed", "delta"}};
    std::vector<Strip> strips;
    auto add = [&](const std::string& role, const PerturbationAspect& a, const std::string& vn,
                   const json& analysis) {
      const json* m = find_metric(analysis, "overall_score");
      if (!m || (*m)["samples"].is_null()) return;
      Strip s{a.name() + " (" + vn + ")", {}};
      for (const auto& p : (*m)["samples"]["pairs"]) {
        const double b = p["baseline"].get<double>();
        const double q = p["perturbed"].get<double>();
        data.push_back({role, a.name(), vn, "overall_score", p["bundle_id"].get<std::string>(),
                        num(b), num(q), num(q - b)});
        s.values.push_back(q - b);
      }
      strips.push_back(std::move(s));
    };
    for (const auto& a : rows) {
      if (a.mode == Mode::kPaper) add("reviewer", a, "reviewer", reviewer[a.name()]);
      for (auto v : cols) {
        const std::string vn(roles::to_string(v));
        add("meta", a, vn, meta[{a.name(), vn}]);
      }
    }
    out.put("figures/delta_distribution.csv", csv(data));
    out.put("figures/delta_distribution.svg",
            render_strips(strips, "Overall score difference per bundle (perturbed - baseline)"));
  }

  // Summary and manifest.
  ordered_json summary;
  summary["schema_version"] = kSchemaVersion;
  ordered_json aspect_names = ordered_json::array();
  for (const auto& a : rows) aspect_names.push_back(a.name());
  summary["aspects"] = aspect_names;
  ordered_json variant_names = ordered_json::array();
  for (auto v : cols) variant_names.push_back(std::string(roles::to_string(v)));
  summary["variants"] = variant_names;
  summary["verdict_grid"] = {{"meta", meta_grid_json}, {"reviewer", reviewer_grid_json}};
  summary["verdict_counts"] = verdict_counts;
  summary["excluded"] = excluded_json;
  summary["excluded_unpaired_total"] = excluded_total;
  if (!perturb_json.is_null()) summary["perturbation_stats"] = perturb_json;
  out.put("summary.json", io::dump_json(summary));
  out.put("run_manifest.json", io::dump_json(stable_manifest(io::read_json(manifest_path))));

  fs::remove_all(out_dir);
  for (const auto& [rel, bytes] : out.files) io::write_file_atomic(out_dir / rel, bytes);
}

}  // namespace rp::report
