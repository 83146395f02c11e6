#pragma once

#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

#include "b2n/graph_io.hpp"

namespace b2n::cli {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from B2N_LOG_LEVEL (error|warn|info|debug, default warn).
inline Level log_level() {
  static const Level level = [] {
    const char* v = std::getenv("B2N_LOG_LEVEL");
    const std::string_view s = v ? v : "";
    if (s == "error") return Level::Error;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

inline void log(Level level, std::string_view msg, Json fields = Json::object()) {
  if (level > log_level()) return;
  static constexpr std::string_view names[] = {"error", "warn", "info", "debug"};
  Json line = {{"level", names[static_cast<int>(level)]}, {"msg", msg}};
  for (auto& [k, v] : fields.items()) line[k] = v;
  std::cerr << line.dump() << '\n';
}

}  // namespace b2n::cli
