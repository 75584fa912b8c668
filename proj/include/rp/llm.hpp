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
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rp::llm {

namespace fs = std::filesystem;

enum class FinishReason { kComplete, kTruncated, kRefused, kError };

std::string_view to_string(FinishReason reason);
FinishReason parse_finish_reason(std::string_view text);

struct Request {
  std::string model_id;
  std::optional<std::string> system_prompt;
  std::string user_prompt;
  int max_output_tokens = 4096;
  double temperature = 0.0;
  std::string request_tag;  // pipeline stage label, not part of identity
};

/// Throws kInvalidRequest for an empty prompt or temperature outside [0, 2].
void validate(const Request& request);

struct Response {
  std::string text;
  FinishReason finish_reason = FinishReason::kComplete;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
};

/// Sorted-key compact JSON of the identity fields with newlines normalized.
std::string canonical_json(const Request& request);

/// SHA-256 hex of canonical_json(request).
std::string digest(const Request& request);

/// What a provider saw on the wire. status follows HTTP semantics: 0 for a
/// transport failure, 429 and 5xx are retried, 401/403 are auth failures.
struct ProviderReply {
  int status = 200;
  std::string text;
  FinishReason finish_reason = FinishReason::kComplete;
  std::string error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderReply call(const Request& request) = 0;
  virtual std::string name() const = 0;
};

struct Policy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{500};
  std::chrono::milliseconds max_delay{30000};
  double requests_per_minute = 0.0;  // 0 disables rate limiting
  int max_in_flight = 4;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Sleeps on the calling thread.
Sleeper real_sleeper();

struct CallRecord {
  std::string request_tag;
  std::string request_digest;
  std::string response_digest;
  FinishReason finish_reason = FinishReason::kComplete;
  bool from_cache = false;
};

/// Content-addressed cache under `<dir>/<digest>.json`.
class ResponseCache {
 public:
  explicit ResponseCache(fs::path dir) : dir_(std::move(dir)) {}

  std::optional<Response> load(const std::string& digest) const;
  void store(const std::string& digest, const Request& request,
             const Response& response) const;
  fs::path path_for(const std::string& digest) const;
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
};

/// Shareable across threads. Cache hits never reach the provider; identical
/// concurrent requests share one provider call.
class Gateway {
 public:
  Gateway(std::shared_ptr<Provider> provider, std::optional<fs::path> cache_dir,
          Policy policy = {}, Sleeper sleeper = real_sleeper());

  Response complete(const Request& request);

  std::size_t provider_calls() const { return provider_calls_.load(); }
  std::size_t cache_hits() const { return cache_hits_.load(); }

  /// Every completed call, sorted by (tag, digest).
  std::vector<CallRecord> records() const;

  const Policy& policy() const { return policy_; }
  Provider& provider() { return *provider_; }

 private:
  Response call_provider(const Request& request);
  void acquire_slot();
  void release_slot();
  void wait_for_rate_limit();

  std::shared_ptr<Provider> provider_;
  std::optional<ResponseCache> cache_;
  Policy policy_;
  Sleeper sleeper_;

  std::mutex flight_mu_;
  std::map<std::string, std::shared_future<Response>> in_flight_;

  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  int active_ = 0;

  std::mutex rate_mu_;
  std::chrono::steady_clock::time_point next_start_{};

  mutable std::mutex record_mu_;
  std::vector<CallRecord> records_;

  std::atomic<std::size_t> provider_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Throws kTruncation unless the response completed or the caller opts in.
const Response& require_usable(const Response& response, bool allow_truncated);

// Providers -----------------------------------------------------------------

struct MockRule {
  std::optional<std::string> digest;
  std::optional<std::string> tag_prefix;
  std::vector<std::string> responses;  // i-th match gets min(i, n-1)
  int status = 200;
  FinishReason finish_reason = FinishReason::kComplete;
};

/// Deterministic scripted provider. Rules are tried in order; requests that
/// match none fall through to the synthetic responder (or fail when it is
/// disabled).
class MockProvider : public Provider {
 public:
  explicit MockProvider(std::vector<MockRule> rules = {},
                        bool synthetic_fallback = true);

  /// {"rules": [{"digest"|"tag", "text"|"responses", "status",
  /// "finish_reason"}], "synthetic_fallback": bool}
  static std::shared_ptr<MockProvider> from_script(const fs::path& path);

  ProviderReply call(const Request& request) override;
  std::string name() const override { return "mock"; }

  std::size_t calls() const { return calls_.load(); }
  int max_observed_in_flight() const { return max_in_flight_.load(); }
  void set_delay(std::chrono::milliseconds delay) { delay_ = delay; }
  void add_rule(MockRule rule);

 private:
  std::mutex mu_;
  std::vector<MockRule> rules_;
  std::vector<std::size_t> rule_hits_;
  bool synthetic_fallback_;
  std::chrono::milliseconds delay_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<int> in_flight_{0};
  std::atomic<int> max_in_flight_{0};
};

/// The content-sensitive responder behind the mock provider: perturbation
/// edits, false-claim buckets, reviews and meta-reviews, keyed on the
/// request tag and derived from the prompt text.
std::string synthetic_response(const Request& request);

struct HttpSettings {
  std::string base_url;
  std::string api_key;
  std::chrono::seconds timeout{120};
};

std::shared_ptr<Provider> make_openai_provider(HttpSettings settings);
std::shared_ptr<Provider> make_gemini_provider(HttpSettings settings);

/// "mock", "openai-compatible" or "gemini". Empty base_url/api_key fall back
/// to RP_BASE_URL / RP_API_KEY.
std::shared_ptr<Provider> make_provider(const std::string& kind,
                                        HttpSettings settings,
                                        const std::optional<fs::path>& mock_script);

}  // namespace rp::llm
