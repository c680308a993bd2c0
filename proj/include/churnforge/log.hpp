#pragma once

#include <string_view>

namespace churnforge::log {

enum class Level { Debug, Info, Warn, Error };

void set_min_level(Level level);

/// Writes one `level=... step=... msg="..."` line to stderr. Thread-safe.
void emit(Level level, std::string_view step, std::string_view message);

inline void info(std::string_view step, std::string_view message) { emit(Level::Info, step, message); }
inline void warn(std::string_view step, std::string_view message) { emit(Level::Warn, step, message); }
inline void error(std::string_view step, std::string_view message) { emit(Level::Error, step, message); }

}  // namespace churnforge::log
