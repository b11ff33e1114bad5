#include "bevfuse/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>

namespace bevfuse::log {
namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("DUALGUIDE_LOG");
  const std::string_view v = env ? env : "";
  if (v == "debug") return spdlog::level::debug;
  if (v == "info") return spdlog::level::info;
  return spdlog::level::err;
}

}  // namespace

spdlog::logger& logger() {
  static auto instance = [] {
    auto l = std::make_shared<spdlog::logger>("bevfuse", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    l->set_level(level_from_env());
    return l;
  }();
  return *instance;
}

void configure_from_env() { logger().set_level(level_from_env()); }

}  // namespace bevfuse::log
