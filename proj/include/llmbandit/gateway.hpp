#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "llmbandit/core.hpp"
#include "llmbandit/predictor.hpp"
#include "llmbandit/prompts.hpp"

namespace llmbandit {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  double temperature = 0.0;
  std::vector<ChatMessage> messages;
  int max_tokens = 64;
  std::uint64_t sample_index = 0;  // part of the cache key only
  int attempt = 0;                 // part of the cache key only
};

ChatRequest make_user_request(std::string model, std::string prompt, double temperature, int max_tokens = 64);

struct CompletionResult {
  std::string text;
  int attempts = 1;
  bool from_cache = false;
};

class GatewayError : public BanditError {
 public:
  using BanditError::BanditError;
};
class AuthError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};
class RateLimitError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};
class ReplayMissError : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

struct HttpResult {
  int status = 0;  // 0: the request never produced a response
  std::string body;
  std::string error;
};

/// The wire. Counts every operation so tests can assert network silence.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResult post(const std::string& path, const std::string& body,
                          const std::vector<std::pair<std::string, std::string>>& headers) = 0;
  std::size_t operations() const { return operations_.load(); }

 protected:
  std::atomic<std::size_t> operations_{0};
};

/// cpp-httplib client over http:// or https:// base URLs. A path prefix in the
/// base URL is kept in front of every request path.
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(const std::string& base_url, std::chrono::seconds timeout = std::chrono::seconds(60));
  HttpResult post(const std::string& path, const std::string& body,
                  const std::vector<std::pair<std::string, std::string>>& headers) override;

 private:
  std::string scheme_host_port_;
  std::string path_prefix_;
  std::chrono::seconds timeout_;
};

/// Token bucket shared by every caller of one client.
class RateLimiter {
 public:
  using Sleep = std::function<void(std::chrono::milliseconds)>;
  RateLimiter(double requests_per_minute, Sleep sleep);
  void acquire();

 private:
  double per_minute_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  Sleep sleep_;
  std::mutex mutex_;
};

struct ClientConfig {
  std::string api_key;
  int max_tries = 5;
  std::chrono::milliseconds backoff_base{1000};
  double backoff_factor = 2.0;
  double requests_per_minute = 0.0;  // 0: unlimited
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to std::this_thread::sleep_for
};

/// Reads LLM_API_KEY / LLM_API_BASE / LLM_MODEL.
struct GatewayEnv {
  std::string api_key;
  std::string api_base;
  std::string model;
  static GatewayEnv from_environment();
};

/// OpenAI-compatible chat completions: POST /v1/chat/completions with bearer auth.
class ChatClient {
 public:
  ChatClient(std::shared_ptr<HttpTransport> transport, ClientConfig config);

  /// First choice's message content. Retries 429, 5xx and transport failures
  /// with exponential backoff; 401/403 fail immediately.
  CompletionResult complete(const ChatRequest& request);

  std::size_t network_calls() const { return transport_->operations(); }

 private:
  std::shared_ptr<HttpTransport> transport_;
  ClientConfig config_;
  RateLimiter limiter_;
};

std::string request_body(const ChatRequest& request);
std::string extract_content(const std::string& response_body);

/// sha256 hex of (model, temperature, rendered messages, sample index, attempt).
std::string cache_key(const ChatRequest& request);

std::string base64_encode(const std::string& raw);
std::string base64_decode(const std::string& encoded);
std::string sha256_hex(const std::string& data);

enum class GatewayMode { live, record, replay };

GatewayMode parse_gateway_mode(const std::string& name);

/// Response cache in front of a ChatClient, with an on-disk replay log.
///
/// Log format: one line per response, `<key>\t<base64 response>\t<unix seconds>`.
/// Replay mode answers strictly from the log and never touches the client.
class CachingGateway {
 public:
  CachingGateway(GatewayMode mode, std::shared_ptr<ChatClient> client, std::filesystem::path log_path = {});

  CompletionResult cached_complete(const ChatRequest& request);

  GatewayMode mode() const { return mode_; }
  std::size_t network_calls() const { return network_calls_; }
  std::size_t cache_size() const;

 private:
  void load_log();

  GatewayMode mode_;
  std::shared_ptr<ChatClient> client_;
  std::filesystem::path log_path_;
  std::map<std::string, std::string> cache_;
  std::size_t network_calls_ = 0;
  mutable std::mutex mutex_;
};

/// Reward/loss/preference/text predictions served by a language model.
class LlmPredictor final : public Predictor {
 public:
  struct Options {
    std::string model;
    int max_tokens = 64;
    int max_attempts = 3;
    PromptOptions prompt;
    std::vector<std::string> label_pool;  // text tasks
  };

  LlmPredictor(std::shared_ptr<CachingGateway> gateway, Options options);
  PredictionResponse predict(const PredictionRequest& request, Rng& rng) override;

  std::string render(const PredictionRequest& request) const;

 private:
  std::shared_ptr<CachingGateway> gateway_;
  Options options_;
};

}  // namespace llmbandit
