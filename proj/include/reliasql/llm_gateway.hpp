#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

namespace reliasql {

struct ChatRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 512;
  std::string model_tag;
  /// Distinguishes otherwise identical sampled requests (ensemble members) so
  /// each gets its own cache entry. Not sent to the endpoint.
  int sample_index = 0;

  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct ChatResponse {
  std::string text;
  bool cached = false;
  std::int64_t latency_ms = 0;
};

/// Sorted-key JSON of every request field; the basis of the cache key.
std::string canonical_serialization(const ChatRequest& request);
/// Lowercase hex SHA-256 of canonical_serialization().
std::string request_key(const ChatRequest& request);
std::string sha256_hex(std::string_view data);

struct HttpResponse {
  int status = 0;
  std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

/// Outbound HTTP. Implementations throw TransportError when no response was received.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body) = 0;
};

/// cpp-httplib backed transport (http and https).
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(std::chrono::milliseconds timeout = std::chrono::seconds(60)) : timeout_(timeout) {}
  HttpResponse post(const std::string& url, const HttpHeaders& headers, const std::string& body) override;

 private:
  std::chrono::milliseconds timeout_;
};

/// Token bucket holding one token, refilled every `interval`.
class RateLimiter {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  explicit RateLimiter(std::chrono::milliseconds interval, Sleeper sleeper = {});
  void acquire();

 private:
  std::chrono::milliseconds interval_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::optional<std::chrono::steady_clock::time_point> last_;
};

/// Append-only JSON-lines store of request-key -> response text. Later lines
/// win on duplicate keys; unreadable lines are skipped and counted.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  void record(const std::string& key, const ChatRequest& request, const std::string& response_text);
  std::size_t size() const;
  std::size_t skipped_lines() const noexcept { return skipped_; }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::string> entries_;
  std::size_t skipped_ = 0;
};

enum class GatewayMode { Live, Replay, Stub };
enum class MissPolicy { Strict, Empty };

GatewayMode gateway_mode_from_string(std::string_view text);

/// Stub rule: glob patterns ('*' and '?') matched against the whole system
/// and user texts; the first matching rule answers.
struct StubRule {
  std::string system_pattern = "*";
  std::string user_pattern = "*";
  std::string response;
};

struct GatewayConfig {
  GatewayMode mode = GatewayMode::Stub;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string credential_env = "LLM_API_KEY";
  std::optional<std::filesystem::path> cache_path;
  MissPolicy miss_policy = MissPolicy::Strict;
  int max_retries = 3;
  std::chrono::milliseconds backoff_initial{1000};
  std::chrono::milliseconds rate_interval{500};
  std::vector<StubRule> stub_rules;
};

struct GatewayStats {
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t live_calls = 0;
  std::uint64_t retries = 0;
  std::uint64_t stub_calls = 0;
};

bool glob_match(std::string_view pattern, std::string_view text);

/// Reads stub rules from a JSON array of {"system", "user", "response"} objects.
std::vector<StubRule> load_stub_rules(const std::filesystem::path& path);

/// Uniform chat-completion access in live, replay or stub mode.
class LlmGateway {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  /// Throws ConfigError when live mode has no credential in the environment.
  explicit LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport = nullptr, Sleeper sleeper = {});

  ChatResponse complete(const ChatRequest& request);

  GatewayMode mode() const noexcept { return config_.mode; }
  GatewayStats stats() const;

  /// Text returned in stub mode when no rule matches.
  static constexpr std::string_view kStubSentinel = "";

 private:
  std::string call_live(const ChatRequest& request);

  GatewayConfig config_;
  std::shared_ptr<Transport> transport_;
  Sleeper sleeper_;
  std::string credential_;
  ResponseCache cache_;
  RateLimiter limiter_;
  mutable std::mutex stats_mu_;
  GatewayStats stats_;
};

}  // namespace reliasql
