#ifndef INHAND_LOG_HPP
#define INHAND_LOG_HPP

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace inhand::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// error|warn|info|debug, case-sensitive; anything else (or unset) is warn.
inline Level parse_level(const char* text) {
  if (!text) return Level::kWarn;
  const std::string s(text);
  if (s == "error") return Level::kError;
  if (s == "info") return Level::kInfo;
  if (s == "debug") return Level::kDebug;
  return Level::kWarn;
}

inline Level& threshold() {
  static Level level = parse_level(std::getenv("INHAND_LOG"));
  return level;
}

inline bool enabled(Level level) { return static_cast<int>(level) <= static_cast<int>(threshold()); }

inline void write(Level level, const std::string& message) {
  if (!enabled(level)) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  static std::mutex mutex;
  std::lock_guard lock(mutex);
  std::cerr << "[inhand " << names[static_cast<int>(level)] << "] " << message << '\n';
}

template <typename... Args>
void emit(Level level, const Args&... args) {
  if (!enabled(level)) return;
  std::ostringstream os;
  (os << ... << args);
  write(level, os.str());
}

template <typename... Args>
void error(const Args&... args) { emit(Level::kError, args...); }
template <typename... Args>
void warn(const Args&... args) { emit(Level::kWarn, args...); }
template <typename... Args>
void info(const Args&... args) { emit(Level::kInfo, args...); }
template <typename... Args>
void debug(const Args&... args) { emit(Level::kDebug, args...); }

}  // namespace inhand::log

#endif  // INHAND_LOG_HPP
