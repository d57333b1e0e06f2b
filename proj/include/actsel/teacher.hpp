#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "actsel/errors.hpp"
#include "actsel/prompts.hpp"
#include "actsel/rng.hpp"

namespace actsel {

inline constexpr const char* kApiKeyEnvVar = "ACTSEL_TEACHER_API_KEY";
inline constexpr const char* kCompletionsPath = "/v1/chat/completions";

struct RetryPolicy {
  int max_attempts = 3;
  double backoff_base_seconds = 1.0;  // exponential: base * 2^(attempt-1)
  bool jitter = true;
};

struct TeacherConfig {
  std::string mode = "mock";  // "mock" or "http"
  std::string endpoint = "http://127.0.0.1:8080";
  std::string model = "gpt-4o";
  double temperature = 0.8;
  int max_in_flight = 4;
  RetryPolicy retry;
  double timeout_seconds = 60.0;

  void validate() const {
    if (mode != "mock" && mode != "http")
      throw ConfigError("teacher.mode must be \"mock\" or \"http\"");
    if (temperature < 0.0) throw ConfigError("teacher.temperature must be non-negative");
    if (max_in_flight < 1) throw ConfigError("teacher.max_in_flight must be at least 1");
    if (retry.max_attempts < 1) throw ConfigError("teacher.retry.max_attempts must be at least 1");
    if (timeout_seconds <= 0.0) throw ConfigError("teacher.timeout_seconds must be positive");
  }
};

struct CompletionResult {
  std::string text;
  int attempts = 1;
  long prompt_tokens = -1;      // -1 when the provider reports no usage
  long completion_tokens = -1;
  std::chrono::milliseconds latency{0};
};

// Base client: a counting semaphore caps concurrent in-flight requests
// across all callers; implementations only provide do_complete().
class TeacherClient {
 public:
  explicit TeacherClient(int max_in_flight)
      : semaphore_(std::max(1, max_in_flight)) {}
  virtual ~TeacherClient() = default;

  CompletionResult complete(const std::string& prompt) {
    semaphore_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{semaphore_};
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_complete(prompt);
  }

  std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

 protected:
  virtual CompletionResult do_complete(const std::string& prompt) = 0;

 private:
  std::counting_semaphore<> semaphore_;
  std::atomic<std::uint64_t> calls_{0};
};

// ---------------------------------------------------------------------------
// Deterministic mock
// ---------------------------------------------------------------------------

namespace mock {

inline const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> words = {
      "Crimson",  "Silent",   "Golden",  "Restless", "Hidden",  "Electric",
      "Midnight", "Wandering", "Broken",  "Lunar",    "Velvet",  "Rusty",
      "Fearless", "Emerald",  "Hollow",  "Radiant",  "Stormy",  "Gentle",
      "Forgotten", "Burning",  "Quiet",   "Savage",   "Amber",   "Distant"};
  return words;
}

inline const std::vector<std::string>& nouns() {
  static const std::vector<std::string> words = {
      "Horizon", "Garden",  "Voyage",   "Machine", "Harbor",  "Mirror",
      "Orchard", "Signal",  "Station",  "Canyon",  "Lantern", "Archive",
      "Summit",  "Currents", "Parade",  "Outpost", "Meridian", "Labyrinth",
      "Orbit",   "Castle",  "Monsoon",  "Ledger",  "Compass", "Atlas"};
  return words;
}

// Completion as a pure function of (prompt, seed). Recommendation prompts
// get a numbered 20-title list (some with a year suffix); query prompts
// get a single question; anything else echoes a tagged hash.
inline std::string completion_for(const std::string& prompt, std::uint64_t seed) {
  const std::uint64_t key = fnv1a64(prompt) ^ (seed * 0x9e3779b97f4a7c15ull);
  Rng rng(key);
  const auto& adj = adjectives();
  const auto& noun = nouns();

  if (prompt.rfind("Pretend you are a movie recommender system.", 0) == 0) {
    const std::size_t pool = adj.size() * noun.size();
    const std::vector<std::size_t> picks = rng.sample_without_replacement(pool, 20);
    std::string out;
    for (std::size_t i = 0; i < picks.size(); ++i) {
      const std::string title =
          "The " + adj[picks[i] / noun.size()] + " " + noun[picks[i] % noun.size()];
      out += std::to_string(i + 1) + ". " + title;
      if (rng.uniform_index(10) < 3) {
        out += " (" + std::to_string(1960 + rng.uniform_index(60)) + ")";
      }
      out += '\n';
    }
    return out;
  }

  if (prompt.rfind("You will be given multiple product reviews.", 0) == 0) {
    return "Can you recommend something with a " + adj[rng.uniform_index(adj.size())] +
           " " + noun[rng.uniform_index(noun.size())] + " feel that still stays " +
           adj[rng.uniform_index(adj.size())] + "?";
  }

  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return std::string("mock-completion-") + buf;
}

inline long approx_tokens(const std::string& text) {
  long n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool ws = (c == ' ' || c == '\n' || c == '\t');
    if (!ws && !in_word) ++n;
    in_word = !ws;
  }
  return n;
}

}  // namespace mock

// In-process deterministic teacher, keyed by (prompt hash, seed). Used by
// tests and by `--teacher mock` runs; byte-identical output across runs
// and thread schedules.
class MockTeacherClient : public TeacherClient {
 public:
  MockTeacherClient(std::uint64_t seed, int max_in_flight = 4)
      : TeacherClient(max_in_flight), seed_(seed) {}

 protected:
  CompletionResult do_complete(const std::string& prompt) override {
    CompletionResult r;
    r.text = mock::completion_for(prompt, seed_);
    r.attempts = 1;
    r.prompt_tokens = mock::approx_tokens(prompt);
    r.completion_tokens = mock::approx_tokens(r.text);
    return r;
  }

 private:
  std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// HTTP client (OpenAI-compatible chat completions)
// ---------------------------------------------------------------------------

// Sends one user-role message per call and reads the first choice's
// content. Retries transport errors and HTTP 429/5xx with exponential
// backoff; 401/403 fail immediately.
class HttpTeacherClient : public TeacherClient {
 public:
  explicit HttpTeacherClient(TeacherConfig config)
      : TeacherClient(config.max_in_flight), config_(std::move(config)), backoff_rng_(0) {
    config_.validate();
    const char* key = std::getenv(kApiKeyEnvVar);
    if (key == nullptr || *key == '\0')
      throw ConfigError(std::string("HTTP teacher requires the ") + kApiKeyEnvVar +
                        " environment variable; export it before running");
    api_key_ = key;
    backoff_rng_ = Rng(fnv1a64(config_.endpoint));
  }

 protected:
  CompletionResult do_complete(const std::string& prompt) override {
    const auto start = std::chrono::steady_clock::now();
    nlohmann::json body = {
        {"model", config_.model},
        {"temperature", config_.temperature},
        {"messages", {{{"role", "user"}, {"content", prompt}}}},
    };
    const std::string payload = body.dump();

    std::string last_error = "none";
    bool last_was_timeout = false;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      httplib::Client cli(config_.endpoint);
      cli.set_connection_timeout(std::chrono::milliseconds(
          static_cast<long>(config_.timeout_seconds * 1000)));
      cli.set_read_timeout(std::chrono::milliseconds(
          static_cast<long>(config_.timeout_seconds * 1000)));
      cli.set_bearer_token_auth(api_key_);

      auto res = cli.Post(kCompletionsPath, payload, "application/json");
      if (!res) {
        last_was_timeout = (res.error() == httplib::Error::ConnectionTimeout ||
                            res.error() == httplib::Error::Read ||
                            res.error() == httplib::Error::Write);
        last_error = httplib::to_string(res.error());
      } else if (res->status == 401 || res->status == 403) {
        throw AuthError(res->status);
      } else if (res->status == 429 || res->status >= 500) {
        last_was_timeout = false;
        last_error = "HTTP " + std::to_string(res->status);
      } else if (res->status != 200) {
        throw MalformedResponse("unexpected HTTP " + std::to_string(res->status) +
                                ": " + res->body.substr(0, 200));
      } else {
        CompletionResult out = parse_response(res->body);
        out.attempts = attempt;
        out.latency = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        return out;
      }

      if (attempt < config_.retry.max_attempts) sleep_backoff(attempt);
    }
    if (last_was_timeout) throw TimeoutError(config_.retry.max_attempts);
    throw Exhausted(config_.retry.max_attempts, last_error);
  }

 private:
  CompletionResult parse_response(const std::string& body) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) throw MalformedResponse("body is not JSON");
    auto choices = j.find("choices");
    if (choices == j.end() || !choices->is_array() || choices->empty())
      throw MalformedResponse("no choices in response");
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string())
      throw MalformedResponse("choices[0].message.content missing");
    CompletionResult r;
    r.text = first["message"]["content"].get<std::string>();
    if (auto usage = j.find("usage"); usage != j.end() && usage->is_object()) {
      r.prompt_tokens = usage->value("prompt_tokens", -1);
      r.completion_tokens = usage->value("completion_tokens", -1);
    }
    return r;
  }

  void sleep_backoff(int attempt) {
    double seconds = config_.retry.backoff_base_seconds * std::pow(2.0, attempt - 1);
    if (config_.retry.jitter && seconds > 0.0) {
      double draw;
      {
        std::lock_guard<std::mutex> lock(backoff_mutex_);
        draw = backoff_rng_.uniform_real();
      }
      seconds += 0.5 * config_.retry.backoff_base_seconds * draw;
    }
    if (seconds > 0.0)
      std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

  TeacherConfig config_;
  std::string api_key_;
  std::mutex backoff_mutex_;
  Rng backoff_rng_;
};

// Builds the client named by config.mode. The mock is seeded with the run
// seed so end-to-end runs are reproducible.
inline std::unique_ptr<TeacherClient> make_teacher(const TeacherConfig& config,
                                                   std::uint64_t run_seed) {
  config.validate();
  if (config.mode == "mock")
    return std::make_unique<MockTeacherClient>(run_seed, config.max_in_flight);
  return std::make_unique<HttpTeacherClient>(config);
}

}  // namespace actsel
