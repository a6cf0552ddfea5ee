#include "log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace svq {

namespace {

int from_env() {
    const char* v = std::getenv("SVQ_LOG");
    if (!v) return static_cast<int>(LogLevel::Warn);
    if (!std::strcmp(v, "error")) return 0;
    if (!std::strcmp(v, "info")) return 2;
    if (!std::strcmp(v, "debug")) return 3;
    return 1;
}

std::atomic<int>& threshold() {
    static std::atomic<int> t{from_env()};
    return t;
}

const char* tag(LogLevel l) {
    switch (l) {
        case LogLevel::Error: return "error";
        case LogLevel::Warn: return "warn";
        case LogLevel::Info: return "info";
        case LogLevel::Debug: return "debug";
    }
    return "?";
}

}  // namespace

LogLevel log_threshold() { return static_cast<LogLevel>(threshold().load()); }

void set_log_threshold(LogLevel level) { threshold().store(static_cast<int>(level)); }

void log_at(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > threshold().load()) return;
    std::fprintf(stderr, "[svq %s] %s\n", tag(level), msg.c_str());
}

}  // namespace svq
