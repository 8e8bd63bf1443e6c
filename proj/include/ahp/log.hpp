/**
 * @file log.hpp
 * @brief Minimal leveled logging to stderr.
 */
#pragma once

#include <string_view>

namespace ahp::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Off = 3 };

void set_level(Level level);
Level level();

void info(std::string_view msg);
void warn(std::string_view msg);

}  // namespace ahp::log
