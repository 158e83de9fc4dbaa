#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "llmbandit/gateway.hpp"

namespace testing_support {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(LLMBANDIT_FIXTURES) / rel;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("llmbandit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Chat-completions stub on a loopback port. The handler maps the prompt to a reply.
class StubServer {
 public:
  using Handler = std::function<std::pair<int, std::string>(const std::string& prompt, const nlohmann::json& body)>;

  explicit StubServer(Handler handler) : handler_(std::move(handler)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      last_auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      const std::string prompt = body.at("messages").at(0).at("content").get<std::string>();
      auto [status, text] = handler_(prompt, body);
      res.status = status;
      if (status == 200) {
        nlohmann::json out = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}}}}};
        res.set_content(out.dump(), "application/json");
      } else {
        res.set_content(text, "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_.load(); }
  std::string last_auth() const { return last_auth_; }

 private:
  Handler handler_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> requests_{0};
  std::string last_auth_;
};

/// Scripted transport: returns queued results and counts calls.
class ScriptedTransport final : public llmbandit::HttpTransport {
 public:
  std::vector<llmbandit::HttpResult> script;
  std::vector<std::string> bodies;
  std::vector<std::vector<std::pair<std::string, std::string>>> headers;

  llmbandit::HttpResult post(const std::string&, const std::string& body,
                             const std::vector<std::pair<std::string, std::string>>& h) override {
    const std::size_t i = operations_++;
    bodies.push_back(body);
    headers.push_back(h);
    if (i < script.size()) return script[i];
    return script.empty() ? llmbandit::HttpResult{} : script.back();
  }
};

inline llmbandit::HttpResult ok_reply(const std::string& content) {
  nlohmann::json out = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}}}};
  return {200, out.dump(), ""};
}

}  // namespace testing_support
