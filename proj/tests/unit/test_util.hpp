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

#include <atomic>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <unistd.h>

#include "rp/corpus.hpp"

namespace rp::testing {

namespace fs = std::filesystem;

inline fs::path test_dir() { return fs::path(RP_TEST_DIR); }
inline fs::path corpus6_dir() { return test_dir() / "fixtures" / "corpus6"; }

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("rp-test-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

inline std::vector<corpus::PoolEntry> synthetic_pool(std::size_t posters,
                                                     std::size_t spotlights,
                                                     std::size_t orals) {
  std::vector<corpus::PoolEntry> pool;
  auto add = [&](std::size_t n, const char* prefix,
                 corpus::DecisionCategory c) {
    for (std::size_t i = 0; i < n; ++i) {
      pool.emplace_back(prefix + std::to_string(i), c);
    }
  };
  add(posters, "P", corpus::DecisionCategory::kPoster);
  add(spotlights, "S", corpus::DecisionCategory::kSpotlight);
  add(orals, "O", corpus::DecisionCategory::kOral);
  return pool;
}

}  // namespace rp::testing
