#include "maxent/log.hpp"

#include <atomic>
#include <iostream>

namespace maxent::log {
namespace {
std::atomic<Level> g_level{Level::warn};

void emit(Level at, std::string_view tag, std::string_view msg) {
  if (static_cast<int>(g_level.load()) >= static_cast<int>(at)) {
    std::cerr << "[" << tag << "] " << msg << '\n';
  }
}
}  // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void warn(std::string_view msg) { emit(Level::warn, "warn", msg); }
void info(std::string_view msg) { emit(Level::info, "info", msg); }
void debug(std::string_view msg) { emit(Level::debug, "debug", msg); }

}  // namespace maxent::log
