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

#include "rp/config.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <random>

#include "rp/error.hpp"
#include "rp/text.hpp"

namespace rp::config {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::kConfigError, "line " + std::to_string(line) + ": " + msg);
}

bool is_bare_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_string(std::string_view s, std::size_t& i, std::size_t line) {
  ++i;  // opening quote
  std::string out;
  while (i < s.size() && s[i] != '"') {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char e = s[++i];
      switch (e) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, std::string("unsupported escape \\") + e);
      }
    } else {
      out += s[i];
    }
    ++i;
  }
  if (i >= s.size()) fail(line, "unterminated string");
  ++i;
  return out;
}

void skip_space(std::string_view s, std::size_t& i) {
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
}

Value parse_value(std::string_view s, std::size_t line) {
  std::size_t i = 0;
  skip_space(s, i);
  if (i >= s.size()) fail(line, "missing value");
  Value v;
  if (s[i] == '"') {
    v = parse_string(s, i, line);
  } else if (s[i] == '[') {
    ++i;
    std::vector<std::string> items;
    while (true) {
      skip_space(s, i);
      if (i < s.size() && s[i] == ']') {
        ++i;
        break;
      }
      if (i >= s.size() || s[i] != '"') fail(line, "arrays hold strings only");
      items.push_back(parse_string(s, i, line));
      skip_space(s, i);
      if (i < s.size() && s[i] == ',') ++i;
    }
    v = std::move(items);
  } else {
    std::size_t j = i;
    while (j < s.size() && s[j] != '#' && s[j] != ' ' && s[j] != '\t') ++j;
    const std::string token(s.substr(i, j - i));
    i = j;
    if (token == "true" || token == "false") {
      v = token == "true";
    } else {
      const std::string clean = text::replace_all(token, "_", "");
      char* end = nullptr;
      errno = 0;
      if (clean.find_first_of(".eE") == std::string::npos) {
        const long long n = std::strtoll(clean.c_str(), &end, 10);
        if (end == clean.c_str() || *end != '\0' || errno) fail(line, "bad value '" + token + "'");
        v = static_cast<std::int64_t>(n);
      } else {
        const double d = std::strtod(clean.c_str(), &end);
        if (end == clean.c_str() || *end != '\0' || errno) fail(line, "bad value '" + token + "'");
        v = d;
      }
    }
  }
  skip_space(s, i);
  if (i < s.size() && s[i] != '#') fail(line, "trailing characters after value");
  return v;
}

}  // namespace

std::map<std::string, Value> parse_document(std::string_view doc) {
  std::map<std::string, Value> out;
  std::string table;
  std::size_t line_no = 0;
  const std::string normalized = text::normalize_newlines(doc);
  for (auto raw : text::split_lines(normalized)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string_view::npos) fail(line_no, "unterminated table header");
      table = std::string(text::trim(line.substr(1, close - 1)));
      if (table.empty()) fail(line_no, "empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const auto key = text::trim(line.substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_bare_key_char)) {
      fail(line_no, "bad key '" + std::string(key) + "'");
    }
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (out.count(full)) fail(line_no, "duplicate key '" + full + "'");
    out[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return out;
}

void apply_environment(PipelineConfig& c) {
  if (const char* v = std::getenv("RP_PROVIDER"); v && *v) c.provider = v;
  if (const char* v = std::getenv("RP_API_KEY"); v && *v) c.api_key = v;
  if (const char* v = std::getenv("RP_BASE_URL"); v && *v) c.base_url = v;
}

namespace {

template <typename T>
T get(const Value& v, const std::string& key);

template <>
std::string get(const Value& v, const std::string& key) {
  if (auto p = std::get_if<std::string>(&v)) return *p;
  throw Error(ErrorCode::kConfigError, key + " must be a string");
}

template <>
double get(const Value& v, const std::string& key) {
  if (auto p = std::get_if<double>(&v)) return *p;
  if (auto p = std::get_if<std::int64_t>(&v)) return static_cast<double>(*p);
  throw Error(ErrorCode::kConfigError, key + " must be a number");
}

template <>
std::int64_t get(const Value& v, const std::string& key) {
  if (auto p = std::get_if<std::int64_t>(&v)) return *p;
  throw Error(ErrorCode::kConfigError, key + " must be an integer");
}

template <>
std::vector<std::string> get(const Value& v, const std::string& key) {
  if (auto p = std::get_if<std::vector<std::string>>(&v)) return *p;
  throw Error(ErrorCode::kConfigError, key + " must be an array of strings");
}

int get_int(const Value& v, const std::string& key, std::int64_t lo) {
  const auto n = get<std::int64_t>(v, key);
  if (n < lo) throw Error(ErrorCode::kConfigError, key + " must be >= " + std::to_string(lo));
  return static_cast<int>(n);
}

}  // namespace

void apply_document(PipelineConfig& c, const std::map<std::string, Value>& doc) {
  for (const auto& [key, v] : doc) {
    if (key == "corpus.path") c.corpus = get<std::string>(v, key);
    else if (key == "run.out") c.out = get<std::string>(v, key);
    else if (key == "run.id") c.run_id = get<std::string>(v, key);
    else if (key == "run.seed") c.seed = static_cast<std::uint64_t>(get<std::int64_t>(v, key));
    else if (key == "run.jobs") c.jobs = get_int(v, key, 1);
    else if (key == "run.aspects") {
      c.aspects.clear();
      for (const auto& a : get<std::vector<std::string>>(v, key)) c.aspects.push_back(parse_aspect(a));
    } else if (key == "run.variants") {
      c.variants.clear();
      for (const auto& a : get<std::vector<std::string>>(v, key)) c.variants.push_back(roles::parse_variant(a));
    }
    else if (key == "models.reviewer") c.reviewer_model = get<std::string>(v, key);
    else if (key == "models.meta") c.meta_model = get<std::string>(v, key);
    else if (key == "models.perturb") c.perturb_model = get<std::string>(v, key);
    else if (key == "models.role_temperature") c.role_temperature = get<double>(v, key);
    else if (key == "models.perturb_temperature") c.perturb_temperature = get<double>(v, key);
    else if (key == "models.max_output_tokens") c.max_output_tokens = get_int(v, key, 1);
    else if (key == "models.max_prompt_chars") c.max_prompt_chars = static_cast<std::size_t>(get_int(v, key, 0));
    else if (key == "provider.kind") c.provider = get<std::string>(v, key);
    else if (key == "provider.base_url") c.base_url = get<std::string>(v, key);
    else if (key == "provider.mock_script") c.mock_script = fs::path(get<std::string>(v, key));
    else if (key == "provider.cache_dir") c.cache_dir = fs::path(get<std::string>(v, key));
    else if (key == "policy.max_retries") c.max_retries = get_int(v, key, 0);
    else if (key == "policy.base_delay_ms") c.base_delay_ms = get_int(v, key, 0);
    else if (key == "policy.max_delay_ms") c.max_delay_ms = get_int(v, key, 0);
    else if (key == "policy.requests_per_minute") c.requests_per_minute = get<double>(v, key);
    else if (key == "policy.max_in_flight") c.max_in_flight = get_int(v, key, 1);
    else if (key == "stats.alpha") c.alpha = get<double>(v, key);
    else if (key == "stats.margin_dim") c.margin_dim = get<double>(v, key);
    else if (key == "stats.margin_overall") c.margin_overall = get<double>(v, key);
    else if (key == "stats.margin_decision") c.margin_decision = get<double>(v, key);
    else if (key == "stats.decision_mapping") c.decision_mapping = stats::parse_mapping(get<std::string>(v, key));
    else if (key == "stats.exact_threshold") c.exact_threshold = static_cast<std::size_t>(get_int(v, key, 0));
    else if (key == "eval.per_aspect") c.eval_per_aspect = static_cast<std::size_t>(get_int(v, key, 0));
    else if (key == "eval.claim_sample") c.eval_claims = static_cast<std::size_t>(get_int(v, key, 0));
    else throw Error(ErrorCode::kConfigError, "unknown config key '" + key + "'");
  }
}

ordered_json to_json(const PipelineConfig& c) {
  ordered_json j;
  j["corpus"] = c.corpus.generic_string();
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  ordered_json aspects = ordered_json::array();
  for (const auto& a : c.aspects) aspects.push_back(a.name());
  j["aspects"] = aspects;
  ordered_json variants = ordered_json::array();
  for (auto v : c.variants) variants.push_back(std::string(roles::to_string(v)));
  j["variants"] = variants;
  j["models"] = {{"reviewer", c.reviewer_model},
                 {"meta", c.meta_model},
                 {"perturb", c.perturb_model},
                 {"role_temperature", c.role_temperature},
                 {"perturb_temperature", c.perturb_temperature},
                 {"max_output_tokens", c.max_output_tokens},
                 {"max_prompt_chars", c.max_prompt_chars}};
  j["provider"] = {{"kind", c.provider},
                   {"base_url", c.base_url},
                   {"mock_script", c.mock_script ? ordered_json(c.mock_script->generic_string())
                                                 : ordered_json()}};
  j["policy"] = {{"max_retries", c.max_retries},
                 {"base_delay_ms", c.base_delay_ms},
                 {"max_delay_ms", c.max_delay_ms},
                 {"requests_per_minute", c.requests_per_minute},
                 {"max_in_flight", c.max_in_flight}};
  j["stats"] = {{"alpha", c.alpha},
                {"margin_dim", c.margin_dim},
                {"margin_overall", c.margin_overall},
                {"margin_decision", c.margin_decision},
                {"decision_mapping", std::string(stats::to_string(c.decision_mapping))},
                {"exact_threshold", c.exact_threshold}};
  j["eval"] = {{"per_aspect", c.eval_per_aspect}, {"claim_sample", c.eval_claims}};
  return j;
}

std::string new_run_id() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  std::random_device rd;
  char suffix[8];
  std::snprintf(suffix, sizeof suffix, "%04x", rd() & 0xffffu);
  return std::string("run-") + buf + "-" + suffix;
}

}  // namespace rp::config
