#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace mechpert::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Quiet = 3 };

inline std::atomic<Level>& threshold() {
  static std::atomic<Level> level{Level::Warn};
  return level;
}

inline std::atomic<long>& warning_count() {
  static std::atomic<long> count{0};
  return count;
}

inline void set_level(Level level) { threshold().store(level); }

inline void emit(Level level, const char* tag, const std::string& message) {
  if (level < threshold().load()) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[mechpert " << tag << "] " << message << '\n';
}

inline void warn(const std::string& message) {
  warning_count().fetch_add(1);
  emit(Level::Warn, "warn", message);
}

inline void info(const std::string& message) { emit(Level::Info, "info", message); }
inline void debug(const std::string& message) { emit(Level::Debug, "debug", message); }

}  // namespace mechpert::log
