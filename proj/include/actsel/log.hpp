#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <string>

#include <json.hpp>

#include "actsel/errors.hpp"

namespace actsel {

enum class LogLevel : int { Error = 0, Warn = 1, Info = 2, Debug = 3 };

inline LogLevel log_level_from_string(const std::string& s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw ConfigError("unknown log level \"" + s + "\"");
}

inline const char* to_string(LogLevel l) {
  switch (l) {
    case LogLevel::Error: return "error";
    case LogLevel::Warn: return "warn";
    case LogLevel::Info: return "info";
    case LogLevel::Debug: return "debug";
  }
  return "?";
}

// JSON-lines logger. Events carry no timestamps, so a log file from a
// deterministic run is itself reproducible. An optional file sink records
// everything; stderr shows events at or above the configured level.
class Logger {
 public:
  explicit Logger(LogLevel stderr_level = LogLevel::Warn) : stderr_level_(stderr_level) {}

  void open_file(const std::filesystem::path& path) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (path.has_parent_path()) {
      std::error_code ec;
      std::filesystem::create_directories(path.parent_path(), ec);
    }
    file_.open(path, std::ios::trunc);
    if (!file_) throw IoError("cannot open log file " + path.string());
  }

  void event(LogLevel level, const std::string& name,
             nlohmann::ordered_json fields = nlohmann::ordered_json::object()) {
    nlohmann::ordered_json line;
    line["level"] = to_string(level);
    line["event"] = name;
    for (auto& [k, v] : fields.items()) line[k] = v;
    const std::string text = line.dump();
    std::lock_guard<std::mutex> lock(mutex_);
    if (file_.is_open()) file_ << text << '\n';
    if (static_cast<int>(level) <= static_cast<int>(stderr_level_))
      std::cerr << text << '\n';
  }

  void error(const std::string& name, nlohmann::ordered_json f = {}) { event(LogLevel::Error, name, std::move(f)); }
  void warn(const std::string& name, nlohmann::ordered_json f = {}) { event(LogLevel::Warn, name, std::move(f)); }
  void info(const std::string& name, nlohmann::ordered_json f = {}) { event(LogLevel::Info, name, std::move(f)); }
  void debug(const std::string& name, nlohmann::ordered_json f = {}) { event(LogLevel::Debug, name, std::move(f)); }

  void flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    if (file_.is_open()) file_.flush();
  }

 private:
  LogLevel stderr_level_;
  std::mutex mutex_;
  std::ofstream file_;
};

}  // namespace actsel
