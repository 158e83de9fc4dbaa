#include "llmbandit/gateway.hpp"

#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>
#include <openssl/sha.h>

namespace llmbandit {

ChatRequest make_user_request(std::string model, std::string prompt, double temperature, int max_tokens) {
  ChatRequest r;
  r.model = std::move(model);
  r.temperature = temperature;
  r.max_tokens = max_tokens;
  r.messages.push_back({"user", std::move(prompt)});
  return r;
}

// --- transport --------------------------------------------------------------

HttplibTransport::HttplibTransport(const std::string& base_url, std::chrono::seconds timeout) : timeout_(timeout) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("API base must start with http:// or https://");
  const auto path_start = base_url.find('/', scheme_end + 3);
  scheme_host_port_ = base_url.substr(0, path_start);
  if (path_start != std::string::npos) {
    path_prefix_ = base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

HttpResult HttplibTransport::post(const std::string& path, const std::string& body,
                                  const std::vector<std::pair<std::string, std::string>>& headers) {
  ++operations_;
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path_prefix_ + path, h, body, "application/json");
  if (!res) return {0, {}, httplib::to_string(res.error())};
  return {res->status, res->body, {}};
}

// --- rate limiting ----------------------------------------------------------

RateLimiter::RateLimiter(double requests_per_minute, Sleep sleep)
    : per_minute_(requests_per_minute),
      tokens_(requests_per_minute),
      last_(std::chrono::steady_clock::now()),
      sleep_(std::move(sleep)) {}

void RateLimiter::acquire() {
  if (per_minute_ <= 0.0) return;
  std::lock_guard lock(mutex_);
  const double per_ms = per_minute_ / 60000.0;
  while (true) {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed_ms = std::chrono::duration<double, std::milli>(now - last_).count();
    tokens_ = std::min(per_minute_, tokens_ + elapsed_ms * per_ms);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    sleep_(std::chrono::milliseconds(static_cast<long long>(std::ceil((1.0 - tokens_) / per_ms))));
  }
}

// --- client -----------------------------------------------------------------

GatewayEnv GatewayEnv::from_environment() {
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  return {get("LLM_API_KEY"), get("LLM_API_BASE"), get("LLM_MODEL")};
}

namespace {

std::function<void(std::chrono::milliseconds)> default_sleep(std::function<void(std::chrono::milliseconds)> s) {
  if (s) return s;
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

}  // namespace

ChatClient::ChatClient(std::shared_ptr<HttpTransport> transport, ClientConfig config)
    : transport_(std::move(transport)),
      config_(std::move(config)),
      limiter_(config_.requests_per_minute, default_sleep(config_.sleep)) {
  config_.sleep = default_sleep(config_.sleep);
  if (!transport_) throw std::invalid_argument("ChatClient needs a transport");
  if (config_.max_tries < 1) throw std::invalid_argument("max_tries must be >= 1");
}

std::string request_body(const ChatRequest& request) {
  nlohmann::json j;
  j["model"] = request.model;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  j["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return j.dump();
}

std::string extract_content(const std::string& response_body) {
  try {
    const auto j = nlohmann::json::parse(response_body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw GatewayError(std::string("malformed chat completion response: ") + e.what());
  }
}

CompletionResult ChatClient::complete(const ChatRequest& request) {
  const std::string body = request_body(request);
  const std::vector<std::pair<std::string, std::string>> headers = {
      {"Authorization", "Bearer " + config_.api_key}};
  auto delay = config_.backoff_base;
  std::string last_error;
  int last_status = 0;
  for (int attempt = 1; attempt <= config_.max_tries; ++attempt) {
    limiter_.acquire();
    const HttpResult res = transport_->post("/v1/chat/completions", body, headers);
    if (res.status == 200) return {extract_content(res.body), attempt, false};
    if (res.status == 401 || res.status == 403)
      throw AuthError("chat completion rejected credentials (HTTP " + std::to_string(res.status) + ")");
    const bool transient = res.status == 0 || res.status == 429 || res.status >= 500;
    last_status = res.status;
    last_error = res.status == 0 ? res.error : res.body;
    if (!transient)
      throw GatewayError("chat completion failed (HTTP " + std::to_string(res.status) + "): " + res.body);
    if (attempt < config_.max_tries) {
      config_.sleep(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay.count()) * config_.backoff_factor));
    }
  }
  const std::string msg = "chat completion failed after " + std::to_string(config_.max_tries) +
                          " tries (last HTTP " + std::to_string(last_status) + "): " + last_error;
  if (last_status == 429) throw RateLimitError(msg);
  throw GatewayError(msg);
}

// --- hashing / encoding -----------------------------------------------------

std::string sha256_hex(const std::string& data) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest);
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned char c : digest) out << std::setw(2) << static_cast<int>(c);
  return out.str();
}

std::string cache_key(const ChatRequest& request) {
  std::ostringstream canon;
  canon.precision(17);
  canon << "model=" << request.model << '\x1f' << "temperature=" << request.temperature << '\x1f'
        << "sample=" << request.sample_index << '\x1f' << "attempt=" << request.attempt << '\x1f'
        << "max_tokens=" << request.max_tokens;
  for (const auto& m : request.messages) canon << '\x1e' << m.role << '\x1f' << m.content;
  return sha256_hex(canon.str());
}

std::string base64_encode(const std::string& raw) {
  std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(const std::string& encoded) {
  if (encoded.empty()) return {};
  if (encoded.size() % 4 != 0) throw GatewayError("invalid base64 length");
  std::string out(3 * encoded.size() / 4 + 1, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(encoded.data()), static_cast<int>(encoded.size()));
  if (n < 0) throw GatewayError("invalid base64 data");
  std::size_t padding = 0;
  if (encoded.back() == '=') ++padding;
  if (encoded.size() >= 2 && encoded[encoded.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

// --- caching / record-replay ------------------------------------------------

GatewayMode parse_gateway_mode(const std::string& name) {
  if (name == "live") return GatewayMode::live;
  if (name == "record") return GatewayMode::record;
  if (name == "replay") return GatewayMode::replay;
  throw std::invalid_argument("unknown gateway mode: " + name);
}

CachingGateway::CachingGateway(GatewayMode mode, std::shared_ptr<ChatClient> client, std::filesystem::path log_path)
    : mode_(mode), client_(std::move(client)), log_path_(std::move(log_path)) {
  if (mode_ != GatewayMode::replay && !client_) throw std::invalid_argument("live/record gateway needs a client");
  if (mode_ != GatewayMode::live && log_path_.empty()) throw std::invalid_argument("record/replay gateway needs a log path");
  if (mode_ == GatewayMode::replay && !std::filesystem::exists(log_path_))
    throw GatewayError("replay log not found: " + log_path_.string());
  if (mode_ != GatewayMode::live && std::filesystem::exists(log_path_)) load_log();
}

void CachingGateway::load_log() {
  std::ifstream in(log_path_);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    if (tab1 == std::string::npos) throw GatewayError(log_path_.string() + ":" + std::to_string(line_no) + ": malformed replay record");
    const auto tab2 = line.find('\t', tab1 + 1);
    const std::string key = line.substr(0, tab1);
    const std::string payload = line.substr(tab1 + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab1 - 1);
    cache_.try_emplace(key, base64_decode(payload));
  }
}

std::size_t CachingGateway::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

CompletionResult CachingGateway::cached_complete(const ChatRequest& request) {
  const std::string key = cache_key(request);
  {
    std::lock_guard lock(mutex_);
    if (const auto it = cache_.find(key); it != cache_.end()) return {it->second, 1, true};
    if (mode_ == GatewayMode::replay) {
      const std::string prompt = request.messages.empty() ? std::string() : request.messages.back().content;
      throw ReplayMissError("replay miss: key " + key + ", prompt digest " + sha256_hex(prompt));
    }
  }
  CompletionResult result = client_->complete(request);
  std::lock_guard lock(mutex_);
  ++network_calls_;
  cache_.try_emplace(key, result.text);
  if (mode_ == GatewayMode::record) {
    std::ofstream out(log_path_, std::ios::app);
    if (!out) throw GatewayError("cannot append to replay log " + log_path_.string());
    const auto now = std::chrono::duration_cast<std::chrono::seconds>(
        std::chrono::system_clock::now().time_since_epoch()).count();
    out << key << '\t' << base64_encode(result.text) << '\t' << now << '\n';
  }
  return result;
}

// --- LLM-backed predictor ---------------------------------------------------

LlmPredictor::LlmPredictor(std::shared_ptr<CachingGateway> gateway, Options options)
    : gateway_(std::move(gateway)), options_(std::move(options)) {
  if (!gateway_) throw std::invalid_argument("LlmPredictor needs a gateway");
  if (options_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

std::string LlmPredictor::render(const PredictionRequest& request) const {
  const History& h = *request.history;
  switch (request.kind) {
    case PredictionKind::reward:
      if (h.kind() == HistoryKind::text)
        return render_text_ts_prompt(options_.label_pool, h, request.text->title, request.text->content,
                                     request.text->label, options_.prompt);
      return render_reward_prompt(h, request.query_features, HistoryKind::reward, options_.prompt);
    case PredictionKind::loss:
      return render_reward_prompt(h, request.query_features, HistoryKind::loss, options_.prompt);
    case PredictionKind::preference_probability:
      return render_dueling_prompt(h, request.query_features, options_.prompt);
  }
  throw std::logic_error("unhandled prediction kind");
}

PredictionResponse LlmPredictor::predict(const PredictionRequest& request, Rng& /*rng*/) {
  validate_request(request);
  const std::string prompt = render(request);
  std::string last_text;
  std::string last_error;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    ChatRequest chat = make_user_request(options_.model, prompt, request.temperature, options_.max_tokens);
    chat.sample_index = request.sample_index;
    chat.attempt = attempt;
    last_text = gateway_->cached_complete(chat).text;
    try {
      double value = parse_scalar_response(last_text);
      if (request.kind == PredictionKind::preference_probability && (value < 0.0 || value > 1.0)) {
        std::cerr << "warning: preference prediction " << value << " clamped to [0,1]\n";
        value = std::clamp(value, 0.0, 1.0);
      }
      return {value, last_text, attempt + 1};
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ParseError("prediction unparseable after " + std::to_string(options_.max_attempts) +
                   " attempts: " + last_error + " (last response: " + last_text + ")");
}

}  // namespace llmbandit
