#pragma once

#include <string>

namespace svq {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Threshold from the SVQ_LOG environment variable (error|warn|info|debug), default warn.
LogLevel log_threshold();
void set_log_threshold(LogLevel level);
void log_at(LogLevel level, const std::string& msg);

inline void log_warn(const std::string& msg) { log_at(LogLevel::Warn, msg); }
inline void log_info(const std::string& msg) { log_at(LogLevel::Info, msg); }
inline void log_debug(const std::string& msg) { log_at(LogLevel::Debug, msg); }

}  // namespace svq
