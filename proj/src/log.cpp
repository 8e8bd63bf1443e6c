#include "ahp/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace ahp::log {

namespace {
std::atomic<Level> g_level{Level::Warn};
std::mutex g_mutex;

void emit(Level lvl, std::string_view tag, std::string_view msg) {
  if (lvl < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << '[' << tag << "] " << msg << '\n';
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level.load(); }

void info(std::string_view msg) { emit(Level::Info, "info", msg); }
void warn(std::string_view msg) { emit(Level::Warn, "warn", msg); }

}  // namespace ahp::log
