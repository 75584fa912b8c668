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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented extraction of "Label: value" fields from free text. Shared
// by the corpus review format and the LLM output parsers.
namespace rp::fields {

struct FieldSpec {
  std::string key;
  std::vector<std::string> aliases;  // matched case-insensitively
};

struct FieldHit {
  std::size_t spec_index = 0;
  std::size_t line_begin = 0;   // offset of the label line
  std::size_t value_begin = 0;  // offset just past "Label:"
  std::size_t line_end = 0;     // end of the label line (before '\n')
  std::size_t block_end = 0;    // start of the next label line or text end
};

/// Every label line in text order. A label line starts (after optional list
/// or markdown decoration such as "-", "*", "#", "1.", "(2)") with one of
/// the aliases, followed by optional '*' and then ':' or end of line.
std::vector<FieldHit> scan(std::string_view text,
                           std::span<const FieldSpec> specs);

/// First hit for specs[spec_index], if any.
std::optional<FieldHit> first(std::span<const FieldHit> hits,
                              std::size_t spec_index);

/// Trimmed [begin, end) of the value block (inline remainder plus following
/// lines up to the next label).
std::pair<std::size_t, std::size_t> value_range(std::string_view text,
                                                const FieldHit& hit);

std::string_view block_value(std::string_view text, const FieldHit& hit);

/// The value used for numeric fields: the inline remainder, or the first
/// non-empty line of the block when the label stands alone.
std::string_view scalar_value(std::string_view text, const FieldHit& hit);

/// Leading integer of a value such as "8", "8/10", "8: accept, good paper",
/// "**6** = marginally above". Rejects words and decimals ("7.5").
std::optional<int> parse_leading_int(std::string_view value);

}  // namespace rp::fields
