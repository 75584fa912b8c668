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

// The only translation unit that includes httplib.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "rp/error.hpp"
#include "rp/llm.hpp"

namespace rp::llm {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kConfigError, "base URL needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  return e;
}

ProviderReply transport_failure(const httplib::Result& res) {
  ProviderReply r;
  r.status = 0;
  r.finish_reason = FinishReason::kError;
  r.error = httplib::to_string(res.error());
  return r;
}

ProviderReply http_failure(const httplib::Response& res) {
  ProviderReply r;
  r.status = res.status;
  r.finish_reason = FinishReason::kError;
  r.error = res.body.substr(0, 300);
  return r;
}

class OpenAiProvider : public Provider {
 public:
  explicit OpenAiProvider(HttpSettings s) : settings_(std::move(s)) {
    if (settings_.base_url.empty()) settings_.base_url = "https://api.openai.com/v1";
    endpoint_ = split_url(settings_.base_url);
  }

  std::string name() const override { return "openai-compatible"; }

  ProviderReply call(const Request& request) override {
    json body;
    body["model"] = request.model_id;
    body["temperature"] = request.temperature;
    body["max_tokens"] = request.max_output_tokens;
    json messages = json::array();
    if (request.system_prompt) {
      messages.push_back({{"role", "system"}, {"content", *request.system_prompt}});
    }
    messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
    body["messages"] = std::move(messages);

    httplib::Client cli(endpoint_.origin);
    cli.set_connection_timeout(settings_.timeout);
    cli.set_read_timeout(settings_.timeout);
    httplib::Headers headers;
    if (!settings_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + settings_.api_key);
    }
    auto res = cli.Post(endpoint_.prefix + "/chat/completions", headers,
                        body.dump(), "application/json");
    if (!res) return transport_failure(res);
    if (res->status != 200) return http_failure(*res);

    ProviderReply reply;
    try {
      const json j = json::parse(res->body);
      const json& choice = j.at("choices").at(0);
      const json& content = choice.at("message").at("content");
      reply.text = content.is_string() ? content.get<std::string>() : "";
      const std::string finish = choice.value("finish_reason", "stop");
      if (finish == "length") {
        reply.finish_reason = FinishReason::kTruncated;
      } else if (finish == "content_filter") {
        reply.finish_reason = FinishReason::kRefused;
      }
    } catch (const json::exception& e) {
      reply.status = 502;
      reply.finish_reason = FinishReason::kError;
      reply.error = std::string("malformed completion body: ") + e.what();
    }
    return reply;
  }

 private:
  HttpSettings settings_;
  Endpoint endpoint_;
};

class GeminiProvider : public Provider {
 public:
  explicit GeminiProvider(HttpSettings s) : settings_(std::move(s)) {
    if (settings_.base_url.empty()) {
      settings_.base_url = "https://generativelanguage.googleapis.com/v1beta";
    }
    endpoint_ = split_url(settings_.base_url);
  }

  std::string name() const override { return "gemini"; }

  ProviderReply call(const Request& request) override {
    json body;
    body["contents"] = json::array(
        {{{"role", "user"}, {"parts", json::array({{{"text", request.user_prompt}}})}}});
    if (request.system_prompt) {
      body["systemInstruction"] = {
          {"parts", json::array({{{"text", *request.system_prompt}}})}};
    }
    body["generationConfig"] = {{"temperature", request.temperature},
                                {"maxOutputTokens", request.max_output_tokens}};

    httplib::Client cli(endpoint_.origin);
    cli.set_connection_timeout(settings_.timeout);
    cli.set_read_timeout(settings_.timeout);
    httplib::Headers headers;
    if (!settings_.api_key.empty()) headers.emplace("x-goog-api-key", settings_.api_key);
    auto res = cli.Post(endpoint_.prefix + "/models/" + request.model_id +
                            ":generateContent",
                        headers, body.dump(), "application/json");
    if (!res) return transport_failure(res);
    if (res->status != 200) return http_failure(*res);

    ProviderReply reply;
    try {
      const json j = json::parse(res->body);
      if (!j.contains("candidates") || j["candidates"].empty()) {
        reply.finish_reason = FinishReason::kRefused;
        return reply;
      }
      const json& cand = j["candidates"].at(0);
      if (cand.contains("content") && cand["content"].contains("parts")) {
        for (const auto& part : cand["content"]["parts"]) {
          reply.text += part.value("text", "");
        }
      }
      const std::string finish = cand.value("finishReason", "STOP");
      if (finish == "MAX_TOKENS") {
        reply.finish_reason = FinishReason::kTruncated;
      } else if (finish == "SAFETY" || finish == "RECITATION" || finish == "BLOCKLIST") {
        reply.finish_reason = FinishReason::kRefused;
      }
    } catch (const json::exception& e) {
      reply.status = 502;
      reply.finish_reason = FinishReason::kError;
      reply.error = std::string("malformed generateContent body: ") + e.what();
    }
    return reply;
  }

 private:
  HttpSettings settings_;
  Endpoint endpoint_;
};

std::string env_or(const char* name, const std::string& fallback) {
  if (!fallback.empty()) return fallback;
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

std::shared_ptr<Provider> make_openai_provider(HttpSettings settings) {
  return std::make_shared<OpenAiProvider>(std::move(settings));
}

std::shared_ptr<Provider> make_gemini_provider(HttpSettings settings) {
  return std::make_shared<GeminiProvider>(std::move(settings));
}

std::shared_ptr<Provider> make_provider(const std::string& kind,
                                        HttpSettings settings,
                                        const std::optional<fs::path>& mock_script) {
  if (kind == "mock") {
    return mock_script ? MockProvider::from_script(*mock_script)
                       : std::make_shared<MockProvider>();
  }
  settings.base_url = env_or("RP_BASE_URL", settings.base_url);
  settings.api_key = env_or("RP_API_KEY", settings.api_key);
  if (kind == "openai-compatible" || kind == "openai") {
    return make_openai_provider(std::move(settings));
  }
  if (kind == "gemini") return make_gemini_provider(std::move(settings));
  throw Error(ErrorCode::kConfigError,
              "unknown provider '" + kind +
                  "' (expected mock, openai-compatible or gemini)");
}

}  // namespace rp::llm
