#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/teacher.hpp"

namespace actsel {

// Local OpenAI-compatible endpoint backed by the deterministic mock.
// Serves POST /v1/chat/completions plus GET /healthz for readiness checks.
class MockTeacherServer {
 public:
  explicit MockTeacherServer(std::uint64_t seed) : seed_(seed) {
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok", "text/plain");
    });
    server_.Post(kCompletionsPath,
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle_completion(req, res);
                 });
  }

  ~MockTeacherServer() { stop(); }

  // Binds to host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host = "127.0.0.1", int port = 0) {
    if (port == 0) {
      port = server_.bind_to_any_port(host);
      if (port <= 0) throw IoError("mock server could not bind a port");
    } else {
      if (!server_.bind_to_port(host, port))
        throw IoError("mock server could not bind " + host + ":" + std::to_string(port));
    }
    bound_port_ = port;
    return port;
  }

  // Binds and serves on a background thread; returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port = bind(host, port);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  // Serves on the calling thread until stop(). Call bind() first.
  void listen_blocking() { server_.listen_after_bind(); }

  int port() const { return bound_port_; }

  std::uint64_t requests_served() const { return served_.load(); }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  void handle_completion(const httplib::Request& req, httplib::Response& res) {
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("messages") ||
        !body["messages"].is_array() || body["messages"].empty()) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"malformed request"}})", "application/json");
      return;
    }
    const auto& last = body["messages"].back();
    if (!last.contains("content") || !last["content"].is_string()) {
      res.status = 400;
      res.set_content(R"({"error":{"message":"message content missing"}})", "application/json");
      return;
    }
    const std::string prompt = last["content"].get<std::string>();
    const std::string text = mock::completion_for(prompt, seed_);
    const long in_tokens = mock::approx_tokens(prompt);
    const long out_tokens = mock::approx_tokens(text);

    nlohmann::json reply = {
        {"id", "mock-" + std::to_string(served_.fetch_add(1) + 1)},
        {"object", "chat.completion"},
        {"model", body.value("model", "mock")},
        {"choices",
         {{{"index", 0},
           {"message", {{"role", "assistant"}, {"content", text}}},
           {"finish_reason", "stop"}}}},
        {"usage",
         {{"prompt_tokens", in_tokens},
          {"completion_tokens", out_tokens},
          {"total_tokens", in_tokens + out_tokens}}},
    };
    res.set_content(reply.dump(), "application/json");
  }

  std::uint64_t seed_;
  httplib::Server server_;
  std::thread thread_;
  std::atomic<std::uint64_t> served_{0};
  int bound_port_ = 0;
};

}  // namespace actsel
