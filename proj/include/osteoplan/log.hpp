#pragma once

#include <string_view>

namespace osteoplan {

enum class Verbosity { Quiet = 0, Warn = 1, Info = 2 };

/// Current level. Starts from OSTEOPLAN_VERBOSITY (quiet|warn|info), default warn.
Verbosity verbosity();
void set_verbosity(Verbosity level);

/// Writes "warning: <msg>" to stderr when the level allows it.
void warn(std::string_view message);
void info(std::string_view message);

}  // namespace osteoplan
