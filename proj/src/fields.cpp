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

#include "rp/fields.hpp"

#include <algorithm>
#include <cctype>

#include "rp/text.hpp"

namespace rp::fields {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Skips list markers, heading hashes, bold markers and numbering.
std::size_t skip_decoration(std::string_view line) {
  std::size_t i = 0;
  bool progressed = true;
  while (progressed && i < line.size()) {
    progressed = false;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
      ++i;
      progressed = true;
    }
    if (i < line.size() && (line[i] == '#' || line[i] == '*' ||
                            line[i] == '-' || line[i] == '>' ||
                            line[i] == '_')) {
      ++i;
      progressed = true;
      continue;
    }
    // UTF-8 bullet U+2022
    if (line.substr(i, 3) == "\xE2\x80\xA2") {
      i += 3;
      progressed = true;
      continue;
    }
    // "(2)" or "2." or "2)" numbering
    std::size_t j = i;
    bool paren = false;
    if (j < line.size() && line[j] == '(') {
      paren = true;
      ++j;
    }
    std::size_t digits_start = j;
    while (j < line.size() && is_digit(line[j])) ++j;
    if (j > digits_start && j < line.size() &&
        (line[j] == ')' || (!paren && line[j] == '.'))) {
      // "8." followed by a digit is a decimal, not numbering
      if (!(line[j] == '.' && j + 1 < line.size() && is_digit(line[j + 1]))) {
        i = j + 1;
        progressed = true;
      }
    }
  }
  return i;
}

struct Alias {
  std::size_t spec_index;
  std::string lower;
};

}  // namespace

std::vector<FieldHit> scan(std::string_view text,
                           std::span<const FieldSpec> specs) {
  std::vector<Alias> aliases;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (const auto& a : specs[s].aliases) {
      aliases.push_back({s, text::to_lower(a)});
    }
  }
  // Longest alias first so "Overall Score" beats "Score".
  std::stable_sort(aliases.begin(), aliases.end(),
                   [](const Alias& a, const Alias& b) {
                     return a.lower.size() > b.lower.size();
                   });

  std::vector<FieldHit> hits;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, line_end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const std::size_t start = skip_decoration(line);
    const std::string lowered = text::to_lower(line.substr(start));
    for (const auto& alias : aliases) {
      if (lowered.compare(0, alias.lower.size(), alias.lower) != 0) continue;
      std::size_t k = alias.lower.size();
      while (k < lowered.size() && (lowered[k] == '*' || lowered[k] == '_')) ++k;
      while (k < lowered.size() && (lowered[k] == ' ' || lowered[k] == '\t')) ++k;
      bool ok = false;
      if (k < lowered.size() && lowered[k] == ':') {
        ++k;
        while (k < lowered.size() && (lowered[k] == '*' || lowered[k] == '_')) ++k;
        ok = true;
      } else if (text::trim(std::string_view(lowered).substr(k)).find_first_not_of("*_:") ==
                 std::string_view::npos) {
        // label alone on its line, value follows on the next lines
        k = lowered.size();
        ok = true;
      }
      if (!ok) continue;
      FieldHit hit;
      hit.spec_index = alias.spec_index;
      hit.line_begin = pos;
      hit.value_begin = pos + start + k;
      hit.line_end = pos + line.size();
      hits.push_back(hit);
      break;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  for (std::size_t i = 0; i < hits.size(); ++i) {
    hits[i].block_end =
        i + 1 < hits.size() ? hits[i + 1].line_begin : text.size();
  }
  return hits;
}

std::optional<FieldHit> first(std::span<const FieldHit> hits,
                              std::size_t spec_index) {
  for (const auto& h : hits) {
    if (h.spec_index == spec_index) return h;
  }
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> value_range(std::string_view text,
                                                const FieldHit& hit) {
  std::size_t b = hit.value_begin;
  std::size_t e = hit.block_end;
  while (b < e && text::is_space(text[b])) ++b;
  while (e > b && text::is_space(text[e - 1])) --e;
  return {b, e};
}

std::string_view block_value(std::string_view text, const FieldHit& hit) {
  auto [b, e] = value_range(text, hit);
  return text.substr(b, e - b);
}

std::string_view scalar_value(std::string_view text, const FieldHit& hit) {
  auto inline_value =
      text::trim(text.substr(hit.value_begin, hit.line_end - hit.value_begin));
  if (!inline_value.empty()) return inline_value;
  auto block = block_value(text, hit);
  auto nl = block.find('\n');
  return text::trim(block.substr(0, nl));
}

std::optional<int> parse_leading_int(std::string_view value) {
  std::size_t i = 0;
  while (i < value.size() &&
         (text::is_space(value[i]) || value[i] == '*' || value[i] == '_' ||
          value[i] == '[' || value[i] == '(')) {
    ++i;
  }
  std::size_t start = i;
  while (i < value.size() && is_digit(value[i]) && i - start < 6) ++i;
  if (i == start) return std::nullopt;
  if (i < value.size() && is_digit(value[i])) return std::nullopt;
  if (i + 1 < value.size() && (value[i] == '.' || value[i] == ',') &&
      is_digit(value[i + 1])) {
    return std::nullopt;
  }
  return std::stoi(std::string(value.substr(start, i - start)));
}

}  // namespace rp::fields
