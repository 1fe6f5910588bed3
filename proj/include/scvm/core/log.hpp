#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace scvm {

enum class LogLevel { Debug, Info, Warning, Error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

/// Replaces the process-wide sink; returns the previous one. Default writes warnings and errors to stderr.
LogSink set_log_sink(LogSink sink);
void set_log_threshold(LogLevel level);
void log(LogLevel level, std::string_view message);

inline void log_warning(std::string_view message) { log(LogLevel::Warning, message); }
inline void log_info(std::string_view message) { log(LogLevel::Info, message); }

} // namespace scvm
