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
#include <random>
#include <string_view>
#include <vector>

namespace rp {

/// Name recorded in run manifests so samples can be replayed elsewhere.
inline constexpr std::string_view kRngAlgorithm =
    "mt19937_64/rejection-bounded/fisher-yates";

/// Portable seeded generator. std::mt19937_64 output is fixed by the
/// standard, but the standard distributions and std::shuffle are not, so
/// bounded draws and shuffles are implemented here.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double unit();

  /// Partial Fisher-Yates: after the call the first `count` elements are a
  /// uniform sample without replacement, in draw order.
  template <typename T>
  void partial_shuffle(std::vector<T>& items, std::size_t count) {
    const std::size_t n = items.size();
    for (std::size_t i = 0; i < count && i + 1 < n; ++i) {
      const auto j = i + static_cast<std::size_t>(below(n - i));
      if (j != i) std::swap(items[i], items[j]);
    }
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    partial_shuffle(items, items.size());
  }

 private:
  std::mt19937_64 engine_;
};

/// Stable 64-bit FNV-1a, used to derive sub-seeds from labels.
std::uint64_t fnv1a64(std::string_view data);

/// Derives an independent seed for a named sub-stream of a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);

}  // namespace rp
