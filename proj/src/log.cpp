#include "tabml/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace tabml {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::warning)};
std::mutex g_mutex;
std::vector<std::string> g_warnings;
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_info(const std::string& message) {
  if (g_level.load() < static_cast<int>(LogLevel::info)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[info] " << message << '\n';
}

void warn(const std::string& message) {
  std::lock_guard lock(g_mutex);
  g_warnings.push_back(message);
  if (g_level.load() >= static_cast<int>(LogLevel::warning)) std::cerr << "[warning] " << message << '\n';
}

std::vector<std::string> drain_warnings() {
  std::lock_guard lock(g_mutex);
  std::vector<std::string> out;
  out.swap(g_warnings);
  return out;
}

}  // namespace tabml
