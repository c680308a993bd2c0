#include "churnforge/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace churnforge::log {

namespace {
std::atomic<Level> g_min_level{Level::Info};
std::mutex g_mutex;

std::string_view level_name(Level level) {
  switch (level) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
  }
  return "info";
}
}  // namespace

void set_min_level(Level level) { g_min_level = level; }

void emit(Level level, std::string_view step, std::string_view message) {
  if (level < g_min_level.load()) return;
  std::string escaped;
  escaped.reserve(message.size());
  for (char c : message) {
    if (c == '"' || c == '\\') escaped.push_back('\\');
    if (c == '\n') {
      escaped += "\\n";
      continue;
    }
    escaped.push_back(c);
  }
  std::lock_guard lock(g_mutex);
  std::cerr << "level=" << level_name(level) << " step=" << step << " msg=\"" << escaped << "\"\n";
}

}  // namespace churnforge::log
