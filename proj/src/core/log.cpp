#include "scvm/core/log.hpp"

#include <iostream>
#include <mutex>

namespace scvm {

namespace {

std::mutex g_mutex;
LogLevel g_threshold = LogLevel::Warning;

void default_sink(LogLevel level, std::string_view message)
{
    static constexpr std::string_view names[] = {"debug", "info", "warning", "error"};
    std::cerr << "scvm: " << names[static_cast<int>(level)] << ": " << message << '\n';
}

LogSink& sink()
{
    static LogSink s = default_sink;
    return s;
}

} // namespace

LogSink set_log_sink(LogSink s)
{
    std::lock_guard lock(g_mutex);
    auto prev = std::move(sink());
    sink() = s ? std::move(s) : LogSink(default_sink);
    return prev;
}

void set_log_threshold(LogLevel level)
{
    std::lock_guard lock(g_mutex);
    g_threshold = level;
}

void log(LogLevel level, std::string_view message)
{
    std::lock_guard lock(g_mutex);
    if (level < g_threshold)
        return;
    sink()(level, message);
}

} // namespace scvm
