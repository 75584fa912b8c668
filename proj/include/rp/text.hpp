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

#include <string>
#include <string_view>
#include <vector>

namespace rp::text {

bool is_space(char c);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
bool icontains(std::string_view haystack, std::string_view needle);

/// Collapses every run of ASCII whitespace to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

/// Splits into lines without terminators ("\n" or "\r\n").
std::vector<std::string_view> split_lines(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

/// Whitespace-separated words.
std::vector<std::string_view> words(std::string_view s);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

/// Fixed two-decimal rendering for display columns.
std::string format_fixed2(double value);

std::string csv_escape(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);

/// Replaces every occurrence of `from` in `s`.
std::string replace_all(std::string_view s, std::string_view from,
                        std::string_view to);

std::string normalize_newlines(std::string_view s);

}  // namespace rp::text
