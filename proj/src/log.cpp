#include "modelmesh/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace modelmesh {

namespace {
LogLevel parse_level() {
    const char* v = std::getenv("MODELMESH_LOG");
    if (v == nullptr) return LogLevel::warn;
    const std::string s(v);
    if (s == "error") return LogLevel::error;
    if (s == "warn") return LogLevel::warn;
    if (s == "info") return LogLevel::info;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

const char* level_name(LogLevel l) {
    switch (l) {
        case LogLevel::error: return "error";
        case LogLevel::warn: return "warn";
        case LogLevel::info: return "info";
        case LogLevel::debug: return "debug";
    }
    return "?";
}

std::mutex g_mu;
}  // namespace

LogLevel log_level() {
    static const LogLevel level = parse_level();
    return level;
}

void log_message(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > static_cast<int>(log_level())) return;
    std::lock_guard<std::mutex> lock(g_mu);
    std::cerr << "[" << level_name(level) << "] " << msg << "\n";
}

}  // namespace modelmesh
