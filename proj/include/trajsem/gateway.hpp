#pragma once

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "trajsem/rng.hpp"
#include "trajsem/util.hpp"

namespace trajsem {

struct TokenUsage {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;
};

struct LlmRequest {
  std::string model_id;
  double temperature = 0.1;
  int max_tokens = 2048;
  std::string prompt;

  /// Collision-resistant digest of (model, temperature, prompt); the
  /// cache and replay fixture key.
  std::string request_key() const {
    return sha256_hex(json{{"model", model_id}, {"temperature", temperature}, {"prompt", prompt}}
                          .dump());
  }
};

struct LlmResponse {
  std::string text;  // completion verbatim, no trimming
  std::int64_t latency_ms = 0;
  std::optional<TokenUsage> token_usage;
  std::string backend_id;
};

enum class BackendKind { http_chat, replay };

inline const char* backend_kind_name(BackendKind k) {
  return k == BackendKind::http_chat ? "http_chat" : "replay";
}

inline BackendKind parse_backend_kind(std::string_view s) {
  if (iequals(s, "http_chat")) return BackendKind::http_chat;
  if (iequals(s, "replay")) return BackendKind::replay;
  throw ConfigError("unknown backend kind: " + std::string(s));
}

struct BackendConfig {
  BackendKind kind = BackendKind::replay;
  std::string endpoint_url;     // http_chat: full chat-completions URL
  std::string auth_token_env;   // http_chat: env var holding the bearer token
  int timeout_s = 60;
  int max_retries = 3;          // retries after the initial attempt
  int backoff_base_ms = 250;
  int parallelism = 1;
  std::string cache_dir;        // empty: no response cache
  std::string fixture_dir;      // replay: fixtures/<request_key>.json
};

// ---------------- transport ----------------

struct TransportResult {
  int status = 0;
  std::string body;
  bool network_error = false;
  std::string error;
};

/// One HTTP POST. Swappable so tests can script failures and count
/// concurrent calls.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResult post(const std::string& url, const std::string& bearer_token,
                               const std::string& body, int timeout_s) = 0;
};

class HttplibTransport : public Transport {
 public:
  TransportResult post(const std::string& url, const std::string& bearer_token,
                       const std::string& body, int timeout_s) override {
    const size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      return {0, "", true, "malformed endpoint url: " + url};
    }
    const size_t path_start = url.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(base);
    client.set_connection_timeout(timeout_s, 0);
    client.set_read_timeout(timeout_s, 0);
    client.set_write_timeout(timeout_s, 0);
    httplib::Headers headers;
    if (!bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + bearer_token);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) return {0, "", true, httplib::to_string(res.error())};
    return {res->status, res->body, false, ""};
  }
};

// ---------------- gateway ----------------

struct BatchItem {
  std::string request_key;
  std::optional<LlmResponse> response;
  std::optional<std::string> error;
};

/// Dispatches prompts to the configured backend with caching, retries
/// and bounded parallelism. Safe to share across threads; batch_infer
/// owns all concurrency in the pipeline.
class Gateway {
 public:
  struct Stats {
    std::atomic<std::int64_t> backend_calls{0};   // infers that reached the backend
    std::atomic<std::int64_t> transport_attempts{0};
    std::atomic<std::int64_t> cache_hits{0};
  };

  explicit Gateway(BackendConfig config, std::shared_ptr<Transport> transport = nullptr)
      : config_(std::move(config)), transport_(std::move(transport)) {
    if (config_.kind == BackendKind::http_chat && !transport_) {
      transport_ = std::make_shared<HttplibTransport>();
    }
  }

  const BackendConfig& config() const { return config_; }
  const Stats& stats() const { return stats_; }

  LlmResponse infer(const LlmRequest& request) {
    const std::string key = request.request_key();
    if (!config_.cache_dir.empty()) {
      const auto path = cache_path(key);
      if (std::filesystem::exists(path)) {
        stats_.cache_hits += 1;
        return response_from_json(json::parse(read_text_file(path)));
      }
    }
    stats_.backend_calls += 1;
    LlmResponse response = config_.kind == BackendKind::replay ? infer_replay(key)
                                                               : infer_http(request, key);
    if (!config_.cache_dir.empty()) {
      write_text_file(cache_path(key), response_to_json(response).dump() + "\n");
    }
    return response;
  }

  /// Runs requests with at most `parallelism` in flight. Output order
  /// matches input order; one failure never aborts the batch.
  std::vector<BatchItem> batch_infer(const std::vector<LlmRequest>& requests) {
    std::vector<BatchItem> results(requests.size());
    std::atomic<size_t> next{0};
    const int workers =
        std::max(1, std::min<int>(config_.parallelism, static_cast<int>(requests.size())));
    auto run = [&]() {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= requests.size()) return;
        results[i].request_key = requests[i].request_key();
        try {
          results[i].response = infer(requests[i]);
        } catch (const std::exception& e) {
          results[i].error = e.what();
        }
      }
    };
    if (workers == 1) {
      run();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(run);
      for (std::thread& t : pool) t.join();
    }
    return results;
  }

  static json response_to_json(const LlmResponse& r) {
    json j{{"text", r.text}, {"latency_ms", r.latency_ms}, {"backend_id", r.backend_id}};
    if (r.token_usage) {
      j["token_usage"] =
          json{{"prompt", r.token_usage->prompt}, {"completion", r.token_usage->completion}};
    }
    return j;
  }

  static LlmResponse response_from_json(const json& j) {
    LlmResponse r;
    r.text = j.at("text").get<std::string>();
    r.latency_ms = j.value("latency_ms", std::int64_t{0});
    r.backend_id = j.value("backend_id", "");
    if (j.contains("token_usage")) {
      r.token_usage = TokenUsage{j["token_usage"].value("prompt", std::int64_t{0}),
                                 j["token_usage"].value("completion", std::int64_t{0})};
    }
    return r;
  }

 private:
  std::filesystem::path cache_path(const std::string& key) const {
    return std::filesystem::path(config_.cache_dir) / (key + ".json");
  }

  LlmResponse infer_replay(const std::string& key) const {
    if (config_.fixture_dir.empty()) {
      throw ConfigError("replay backend requires a fixture directory");
    }
    const auto path = std::filesystem::path(config_.fixture_dir) / (key + ".json");
    if (!std::filesystem::exists(path)) {
      throw FixtureMissing("replay fixture missing for request key " + key);
    }
    json fixture;
    try {
      fixture = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
      throw ParseError("replay fixture " + path.string() + ": " + e.what());
    }
    LlmResponse response;
    response.text = fixture.at("text").get<std::string>();
    if (fixture.contains("token_usage")) {
      response.token_usage = TokenUsage{fixture["token_usage"].value("prompt", std::int64_t{0}),
                                        fixture["token_usage"].value("completion", std::int64_t{0})};
    }
    response.latency_ms = 0;  // replay is timeless so reruns stay byte-identical
    response.backend_id = "replay";
    return response;
  }

  LlmResponse infer_http(const LlmRequest& request, const std::string& key) {
    if (config_.endpoint_url.empty()) {
      throw ConfigError("http_chat backend requires an endpoint url");
    }
    if (config_.auth_token_env.empty()) {
      throw ConfigError("http_chat backend requires an auth token env var name");
    }
    const char* token = std::getenv(config_.auth_token_env.c_str());
    if (token == nullptr) {
      throw ConfigError("auth token env var is unset: " + config_.auth_token_env);
    }

    const json body{{"model", request.model_id},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_tokens},
                    {"messages", json::array({json{{"role", "user"},
                                                   {"content", request.prompt}}})}};
    const std::string body_str = body.dump();

    // Deterministic jitter keyed by (request, attempt); tests can rely on
    // the attempt schedule.
    SplitMix64 jitter_rng(fnv1a64(key));

    std::string last_error;
    const int attempts_allowed = 1 + std::max(0, config_.max_retries);
    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
      stats_.transport_attempts += 1;
      const auto t0 = std::chrono::steady_clock::now();
      TransportResult res =
          transport_->post(config_.endpoint_url, token, body_str, config_.timeout_s);
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
      if (!res.network_error && res.status >= 200 && res.status < 300) {
        return parse_chat_completion(res.body, elapsed);
      }
      const bool retryable = res.network_error || res.status == 429 || res.status >= 500;
      last_error = res.network_error ? res.error
                                     : "http status " + std::to_string(res.status) +
                                           (res.body.empty() ? "" : ": " + res.body);
      if (!retryable) {
        throw BackendUnavailable("backend rejected request (" + last_error + ")");
      }
      if (attempt < attempts_allowed) {
        const std::int64_t base = config_.backoff_base_ms;
        const std::int64_t backoff = base << (attempt - 1);
        const std::int64_t jitter =
            base > 0 ? static_cast<std::int64_t>(jitter_rng.next_double() * base) : 0;
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff + jitter));
      }
    }
    throw BackendUnavailable("backend still failing after " + std::to_string(attempts_allowed) +
                             " attempts (" + last_error + ")");
  }

  LlmResponse parse_chat_completion(const std::string& body, std::int64_t latency_ms) const {
    json doc;
    try {
      doc = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("chat completion response is not JSON: ") + e.what());
    }
    LlmResponse response;
    try {
      response.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      throw ParseError("chat completion response missing choices[0].message.content");
    }
    if (doc.contains("usage")) {
      response.token_usage = TokenUsage{doc["usage"].value("prompt_tokens", std::int64_t{0}),
                                        doc["usage"].value("completion_tokens", std::int64_t{0})};
    }
    response.latency_ms = latency_ms;
    response.backend_id = "http_chat";
    return response;
  }

  BackendConfig config_;
  std::shared_ptr<Transport> transport_;
  Stats stats_;
};

}  // namespace trajsem
