#pragma once

#include <utility>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

// Thin wrapper over an stderr spdlog logger. The level comes from the
// DUALGUIDE_LOG environment variable (error, info, debug); default is error.
namespace bevfuse::log {

spdlog::logger& logger();

// Re-reads DUALGUIDE_LOG.
void configure_from_env();

template <typename... Args>
void debug(fmt::format_string<Args...> f, Args&&... args) {
  logger().debug(f, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
  logger().info(f, std::forward<Args>(args)...);
}

template <typename... Args>
void warn(fmt::format_string<Args...> f, Args&&... args) {
  logger().warn(f, std::forward<Args>(args)...);
}

template <typename... Args>
void error(fmt::format_string<Args...> f, Args&&... args) {
  logger().error(f, std::forward<Args>(args)...);
}

}  // namespace bevfuse::log
