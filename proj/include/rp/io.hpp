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

#include <nlohmann/json.hpp>

namespace rp::io {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path);

/// Writes via a temporary sibling and rename so readers never observe a
/// partially written file.
void write_file_atomic(const fs::path& path, std::string_view contents);

/// Canonical on-disk JSON: two-space indent, UTF-8 unescaped, trailing newline.
std::string dump_json(const nlohmann::ordered_json& value);
std::string dump_json(const nlohmann::json& value);

nlohmann::json read_json(const fs::path& path);

std::string sha256_hex(std::string_view data);

/// Root holding prompts/ and data/: $RP_RESOURCE_DIR, else the source tree.
fs::path resource_dir();

}  // namespace rp::io
