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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rp/aspect.hpp"
#include "rp/roles.hpp"
#include "rp/stats.hpp"

namespace rp::report {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Column order of the meta-reviewer grids.
inline constexpr roles::CotVariant kGridVariants[] = {
    roles::CotVariant::kDimension, roles::CotVariant::kNone, roles::CotVariant::kTemplate};

/// Square count grid with every cell annotated. Throws kShapeMismatch unless
/// the matrix is order.size() x order.size().
std::string render_heatmap(const stats::CountMatrix& matrix,
                           const std::vector<std::string>& order,
                           std::string_view title = "");

struct Bar {
  std::string label;
  double value = 0.0;
};

/// Horizontal bars around a zero axis.
std::string render_bars(const std::vector<Bar>& bars, std::string_view title);

struct Strip {
  std::string label;
  std::vector<double> values;
};

/// One row of dots per strip on a shared horizontal scale.
std::string render_strips(const std::vector<Strip>& strips, std::string_view title);

/// Run manifest without run id, timestamps, paths and cache provenance.
nlohmann::ordered_json stable_manifest(const nlohmann::json& manifest);

/// Round(100 * |value| / max |value|), 0 when every value is zero.
std::vector<int> intensities(const std::vector<double>& values);

/// Reads <run>/analysis, <run>/run_manifest.json and, when present,
/// <run>/perturbation_stats.json; writes tables/, figures/, summary.json
/// and run_manifest.json under out_dir, replacing its previous contents.
/// Throws kMissingAnalysis when nothing is requested or an analysis file
/// is absent.
void build_report(const fs::path& run_dir, const fs::path& out_dir,
                  const std::vector<PerturbationAspect>& aspects,
                  const std::vector<roles::CotVariant>& variants);

}  // namespace rp::report
