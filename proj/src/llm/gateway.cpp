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

#include <algorithm>
#include <cmath>
#include <tuple>
#include <thread>

#include <nlohmann/json.hpp>

#include "rp/error.hpp"
#include "rp/io.hpp"
#include "rp/llm.hpp"
#include "rp/text.hpp"

namespace rp::llm {

using nlohmann::json;

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kComplete: return "complete";
    case FinishReason::kTruncated: return "truncated";
    case FinishReason::kRefused: return "refused";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view text) {
  if (text == "complete") return FinishReason::kComplete;
  if (text == "truncated") return FinishReason::kTruncated;
  if (text == "refused") return FinishReason::kRefused;
  if (text == "error") return FinishReason::kError;
  throw Error(ErrorCode::kInvalidDocument,
              "unknown finish_reason '" + std::string(text) + "'");
}

void validate(const Request& request) {
  if (text::trim(request.user_prompt).empty()) {
    throw Error(ErrorCode::kInvalidRequest, "empty user prompt");
  }
  if (!(request.temperature >= 0.0 && request.temperature <= 2.0)) {
    throw Error(ErrorCode::kInvalidRequest, "temperature must lie in [0, 2]");
  }
  if (request.max_output_tokens <= 0) {
    throw Error(ErrorCode::kInvalidRequest, "max_output_tokens must be positive");
  }
}

namespace {

json identity_json(const Request& r) {
  json j;  // std::map-backed, so keys serialize sorted
  j["model_id"] = r.model_id;
  j["system_prompt"] = r.system_prompt
                           ? json(text::normalize_newlines(*r.system_prompt))
                           : json(nullptr);
  j["user_prompt"] = text::normalize_newlines(r.user_prompt);
  j["temperature"] = r.temperature;
  j["max_output_tokens"] = r.max_output_tokens;
  return j;
}

bool retryable(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

std::string canonical_json(const Request& request) {
  return identity_json(request).dump(-1, ' ', false,
                                     json::error_handler_t::strict);
}

std::string digest(const Request& request) {
  return io::sha256_hex(canonical_json(request));
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

fs::path ResponseCache::path_for(const std::string& digest) const {
  return dir_ / (digest + ".json");
}

std::optional<Response> ResponseCache::load(const std::string& digest) const {
  const fs::path p = path_for(digest);
  if (!fs::exists(p)) return std::nullopt;
  try {
    const json j = io::read_json(p);
    const json& r = j.at("response");
    Response out;
    out.text = r.at("text").get<std::string>();
    out.finish_reason = parse_finish_reason(r.at("finish_reason").get<std::string>());
    out.latency_ms = r.value("latency_ms", std::int64_t{0});
    out.from_cache = true;
    return out;
  } catch (const std::exception&) {
    return std::nullopt;  // unreadable entries are refetched and overwritten
  }
}

void ResponseCache::store(const std::string& digest, const Request& request,
                          const Response& response) const {
  json j;
  j["digest"] = digest;
  j["request"] = identity_json(request);
  j["response"] = {{"text", response.text},
                   {"finish_reason", std::string(to_string(response.finish_reason))},
                   {"latency_ms", response.latency_ms}};
  io::write_file_atomic(path_for(digest), io::dump_json(j));
}

Gateway::Gateway(std::shared_ptr<Provider> provider,
                 std::optional<fs::path> cache_dir, Policy policy,
                 Sleeper sleeper)
    : provider_(std::move(provider)),
      policy_(policy),
      sleeper_(std::move(sleeper)) {
  if (!provider_) throw Error(ErrorCode::kConfigError, "no provider");
  if (cache_dir) cache_.emplace(*cache_dir);
  if (policy_.max_in_flight < 1) policy_.max_in_flight = 1;
  if (policy_.max_retries < 0) policy_.max_retries = 0;
}

Response Gateway::complete(const Request& request) {
  validate(request);
  const std::string key = digest(request);
  auto record = [&](const Response& r) {
    std::lock_guard lock(record_mu_);
    records_.push_back({request.request_tag, key, io::sha256_hex(r.text),
                        r.finish_reason, r.from_cache});
  };
  if (cache_) {
    if (auto hit = cache_->load(key)) {
      ++cache_hits_;
      record(*hit);
      return *hit;
    }
  }

  std::promise<Response> promise;
  std::shared_future<Response> shared;
  bool owner = false;
  {
    std::lock_guard lock(flight_mu_);
    auto it = in_flight_.find(key);
    if (it != in_flight_.end()) {
      shared = it->second;
    } else {
      shared = promise.get_future().share();
      in_flight_.emplace(key, shared);
      owner = true;
    }
  }
  if (!owner) {
    Response r = shared.get();
    record(r);
    return r;
  }

  auto finish = [&] {
    std::lock_guard lock(flight_mu_);
    in_flight_.erase(key);
  };
  try {
    Response r;
    std::optional<Response> late_hit = cache_ ? cache_->load(key) : std::nullopt;
    if (late_hit) {
      ++cache_hits_;
      r = *late_hit;
    } else {
      r = call_provider(request);
      if (cache_) cache_->store(key, request, r);
    }
    promise.set_value(r);
    finish();
    record(r);
    return r;
  } catch (...) {
    promise.set_exception(std::current_exception());
    finish();
    throw;
  }
}

void Gateway::acquire_slot() {
  std::unique_lock lock(slot_mu_);
  slot_cv_.wait(lock, [&] { return active_ < policy_.max_in_flight; });
  ++active_;
}

void Gateway::release_slot() {
  {
    std::lock_guard lock(slot_mu_);
    --active_;
  }
  slot_cv_.notify_one();
}

void Gateway::wait_for_rate_limit() {
  if (policy_.requests_per_minute <= 0.0) return;
  const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double, std::milli>(60000.0 / policy_.requests_per_minute));
  std::chrono::steady_clock::duration wait{0};
  {
    std::lock_guard lock(rate_mu_);
    const auto now = std::chrono::steady_clock::now();
    if (next_start_ > now) {
      wait = next_start_ - now;
      next_start_ += interval;
    } else {
      next_start_ = now + interval;
    }
  }
  if (wait.count() > 0) {
    sleeper_(std::chrono::ceil<std::chrono::milliseconds>(wait));
  }
}

Response Gateway::call_provider(const Request& request) {
  std::string last_error;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double factor = std::pow(2.0, attempt - 1);
      auto delay = std::chrono::milliseconds(static_cast<std::int64_t>(
          static_cast<double>(policy_.base_delay.count()) * factor));
      sleeper_(std::min(delay, policy_.max_delay));
    }
    acquire_slot();
    ProviderReply reply;
    const auto start = std::chrono::steady_clock::now();
    try {
      wait_for_rate_limit();
      ++provider_calls_;
      reply = provider_->call(request);
    } catch (const std::exception& e) {
      reply.status = 0;
      reply.error = e.what();
    }
    release_slot();
    const auto latency = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    if (reply.status == 401 || reply.status == 403) {
      throw Error(ErrorCode::kAuthError,
                  provider_->name() + " rejected credentials (HTTP " +
                      std::to_string(reply.status) + ")");
    }
    if (reply.status >= 200 && reply.status < 300) {
      const bool empty_complete = reply.finish_reason == FinishReason::kComplete &&
                                  text::trim(reply.text).empty();
      if (reply.finish_reason != FinishReason::kError && !empty_complete) {
        Response r;
        r.text = std::move(reply.text);
        r.finish_reason = reply.finish_reason;
        r.latency_ms = latency.count();
        return r;
      }
      last_error = empty_complete ? "empty completion" : reply.error;
      continue;
    }
    last_error = "HTTP " + std::to_string(reply.status) +
                 (reply.error.empty() ? "" : ": " + reply.error);
    if (!retryable(reply.status)) {
      throw Error(ErrorCode::kGatewayError, provider_->name() + " " + last_error);
    }
  }
  throw Error(ErrorCode::kProviderExhausted,
              provider_->name() + " failed after " +
                  std::to_string(policy_.max_retries + 1) +
                  " attempts; last error: " + last_error);
}

std::vector<CallRecord> Gateway::records() const {
  std::vector<CallRecord> out;
  {
    std::lock_guard lock(record_mu_);
    out = records_;
  }
  std::sort(out.begin(), out.end(), [](const CallRecord& a, const CallRecord& b) {
    return std::tie(a.request_tag, a.request_digest) <
           std::tie(b.request_tag, b.request_digest);
  });
  return out;
}

const Response& require_usable(const Response& response, bool allow_truncated) {
  if (response.finish_reason == FinishReason::kTruncated && !allow_truncated) {
    throw Error(ErrorCode::kTruncation,
                "response was truncated at the output token limit");
  }
  return response;
}

}  // namespace rp::llm
