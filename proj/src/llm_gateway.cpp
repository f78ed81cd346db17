#include "reliasql/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <openssl/evp.h>
#include <nlohmann/json.hpp>

#include "reliasql/core.hpp"
#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"

namespace reliasql {

using nlohmann::json;

namespace {

json request_json(const ChatRequest& r) {
  // nlohmann::json objects keep keys sorted, which makes the dump canonical.
  return json{{"system_text", r.system_text}, {"user_text", r.user_text},     {"temperature", r.temperature},
              {"max_output_tokens", r.max_output_tokens}, {"model_tag", r.model_tag}, {"sample_index", r.sample_index}};
}

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace

std::string canonical_serialization(const ChatRequest& request) { return request_json(request).dump(); }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return out.str();
}

std::string request_key(const ChatRequest& request) { return sha256_hex(canonical_serialization(request)); }

HttpResponse HttpTransport::post(const std::string& url, const HttpHeaders& headers, const std::string& body) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  std::string origin = url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) throw TransportError("HTTP request to " + origin + " failed: " + httplib::to_string(res.error()));
  return HttpResponse{res->status, res->body};
}

RateLimiter::RateLimiter(std::chrono::milliseconds interval, Sleeper sleeper)
    : interval_(interval), sleeper_(sleeper ? std::move(sleeper) : Sleeper(default_sleep)) {}

void RateLimiter::acquire() {
  std::lock_guard lock(mu_);
  auto now = std::chrono::steady_clock::now();
  if (last_ && interval_.count() > 0) {
    auto ready = *last_ + interval_;
    if (now < ready) {
      sleeper_(std::chrono::duration_cast<std::chrono::milliseconds>(ready - now));
      now = std::max(std::chrono::steady_clock::now(), ready);
    }
  }
  last_ = now;
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;  // a missing cache file is an empty cache
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    try {
      json rec = json::parse(line);
      entries_[rec.at("key").get<std::string>()] = rec.at("response").at("text").get<std::string>();
    } catch (const json::exception&) {
      ++skipped_;
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::record(const std::string& key, const ChatRequest& request, const std::string& response_text) {
  std::unique_lock lock(mu_);
  entries_[key] = response_text;
  if (!path_) return;
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to cache file " + path_->string());
  json rec = {{"key", key}, {"request", request_json(request)}, {"response", {{"text", response_text}}}};
  out << rec.dump() << '\n';
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

GatewayMode gateway_mode_from_string(std::string_view text) {
  if (text == "live") return GatewayMode::Live;
  if (text == "replay") return GatewayMode::Replay;
  if (text == "stub") return GatewayMode::Stub;
  throw ConfigError("unknown gateway mode '" + std::string(text) + "' (expected live, replay or stub)");
}

bool glob_match(std::string_view pattern, std::string_view text) {
  std::size_t p = 0, t = 0, star = std::string_view::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::vector<StubRule> load_stub_rules(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError("malformed stub rule file " + path.string() + ": " + e.what(), e.byte);
  }
  std::vector<StubRule> rules;
  for (const auto& r : doc) {
    StubRule rule;
    rule.system_pattern = r.value("system", "*");
    rule.user_pattern = r.value("user", "*");
    rule.response = r.at("response").get<std::string>();
    rules.push_back(std::move(rule));
  }
  return rules;
}

LlmGateway::LlmGateway(GatewayConfig config, std::shared_ptr<Transport> transport, Sleeper sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(sleeper ? sleeper : Sleeper(default_sleep)),
      cache_(config_.cache_path ? ResponseCache(*config_.cache_path) : ResponseCache()),
      limiter_(config_.rate_interval, sleeper_) {
  if (config_.mode == GatewayMode::Live) {
    const char* key = std::getenv(config_.credential_env.c_str());
    if (!key || !*key) throw ConfigError("live gateway needs a credential in $" + config_.credential_env);
    credential_ = key;
    if (!transport_) transport_ = std::make_shared<HttpTransport>();
  }
}

GatewayStats LlmGateway::stats() const {
  std::lock_guard lock(stats_mu_);
  return stats_;
}

std::string LlmGateway::call_live(const ChatRequest& request) {
  json messages = json::array();
  if (!request.system_text.empty()) messages.push_back({{"role", "system"}, {"content", request.system_text}});
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  json body = {{"model", request.model_tag},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_output_tokens}};
  const HttpHeaders headers = {{"Authorization", "Bearer " + credential_}};
  const std::string payload = body.dump();

  std::string last_error;
  auto backoff = config_.backoff_initial;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.retries;
      }
      sleeper_(backoff);
      backoff *= 2;
    }
    limiter_.acquire();
    {
      std::lock_guard lock(stats_mu_);
      ++stats_.live_calls;
    }
    HttpResponse res;
    try {
      res = transport_->post(config_.endpoint, headers, payload);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200) throw TransportError("chat endpoint returned HTTP " + std::to_string(res.status) + ": " + res.body);
    try {
      return json::parse(res.body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw TransportError(std::string("unexpected chat endpoint response: ") + e.what());
    }
  }
  throw TransportError("chat endpoint failed after " + std::to_string(config_.max_retries) + " retries: " + last_error);
}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
  if (request.user_text.empty()) throw std::invalid_argument("chat request needs user text");
  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  };

  switch (config_.mode) {
    case GatewayMode::Stub: {
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.stub_calls;
      }
      for (const auto& rule : config_.stub_rules)
        if (glob_match(rule.system_pattern, request.system_text) && glob_match(rule.user_pattern, request.user_text))
          return ChatResponse{rule.response, false, 0};
      return ChatResponse{std::string(kStubSentinel), false, 0};
    }
    case GatewayMode::Replay: {
      const std::string key = request_key(request);
      if (auto hit = cache_.lookup(key)) {
        std::lock_guard lock(stats_mu_);
        ++stats_.cache_hits;
        return ChatResponse{*hit, true, elapsed()};
      }
      {
        std::lock_guard lock(stats_mu_);
        ++stats_.cache_misses;
      }
      if (config_.miss_policy == MissPolicy::Strict) throw CacheMissError(key);
      return ChatResponse{"", false, elapsed()};
    }
    case GatewayMode::Live: {
      const std::string key = request_key(request);
      std::string text = call_live(request);
      cache_.record(key, request, text);
      return ChatResponse{std::move(text), false, elapsed()};
    }
  }
  throw std::logic_error("unhandled gateway mode");
}

}  // namespace reliasql
