#include <eiv/bench/logging.hpp>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <string>

namespace eiv::bench {

void init_logging() {
  auto logger = spdlog::stderr_color_mt("eiv");
  logger->set_pattern("[%l] %v");
  const char* env = std::getenv("EIV_LOG");
  const std::string level = env ? env : "info";
  if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else if (level == "quiet") {
    logger->set_level(spdlog::level::off);
  } else {
    logger->set_level(spdlog::level::info);
  }
  spdlog::set_default_logger(logger);
}

}  // namespace eiv::bench
