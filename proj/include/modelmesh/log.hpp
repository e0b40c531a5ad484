#pragma once

#include <string>

namespace modelmesh {

// Verbosity comes from the MODELMESH_LOG env var: error|warn|info|debug.
// Default is warn. Everything goes to stderr; stdout stays machine-readable.
enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();

void log_message(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log_message(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log_message(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log_message(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log_message(LogLevel::debug, msg); }

}  // namespace modelmesh
