#pragma once

// stderr diagnostics with a process-wide verbosity switch.

#include <string>

namespace mcal::log {

enum class Level { Quiet = 0, Warn = 1, Info = 2 };

void set_level(Level l);
Level level();

void info(const std::string& msg);
void warn(const std::string& msg);
/// Emits a given warning text only the first time it is seen.
void warn_once(const std::string& msg);

}  // namespace mcal::log
