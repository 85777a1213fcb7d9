#pragma once

#include <string>
#include <vector>

namespace tabml {

enum class LogLevel { quiet = 0, warning = 1, info = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_info(const std::string& message);
/// Records the warning in the process-wide sink and echoes it to stderr.
void warn(const std::string& message);

/// Returns and clears the warnings recorded so far.
std::vector<std::string> drain_warnings();

}  // namespace tabml
