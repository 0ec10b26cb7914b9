#include "kapcpd/errors.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace kapcpd {

namespace {
std::atomic<bool> g_warnings{true};
std::mutex g_log_mutex;
}  // namespace

FormatError::FormatError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

void log_warning(const std::string& msg) {
  if (!g_warnings.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void set_warnings_enabled(bool enabled) { g_warnings.store(enabled, std::memory_order_relaxed); }

}  // namespace kapcpd
