#pragma once

#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "exsclaim/json_io.hpp"

namespace exsclaim {

enum class LogLevel { debug, info, warning, error };

/// Process-wide logger. Writes to stderr (at or above the console level) and, once
/// `open_file` is called, mirrors every record into that file.
class Logger {
public:
    static Logger& instance() {
        static Logger logger;
        return logger;
    }

    void set_console_level(LogLevel level) {
        std::lock_guard lock(mutex_);
        console_level_ = level;
    }

    void open_file(const std::string& path) {
        std::lock_guard lock(mutex_);
        file_ = std::make_unique<std::ofstream>(path, std::ios::out | std::ios::trunc);
    }

    void close_file() {
        std::lock_guard lock(mutex_);
        file_.reset();
    }

    void log(LogLevel level, std::string_view message) {
        static constexpr std::string_view names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
        std::lock_guard lock(mutex_);
        const auto name = names[static_cast<int>(level)];
        if (level >= console_level_) std::cerr << "[" << name << "] " << message << "\n";
        if (file_) *file_ << utc_timestamp() << " [" << name << "] " << message << "\n" << std::flush;
    }

private:
    Logger() = default;
    std::mutex mutex_;
    LogLevel console_level_ = LogLevel::warning;
    std::unique_ptr<std::ofstream> file_;
};

inline void log_debug(std::string_view m) { Logger::instance().log(LogLevel::debug, m); }
inline void log_info(std::string_view m) { Logger::instance().log(LogLevel::info, m); }
inline void log_warning(std::string_view m) { Logger::instance().log(LogLevel::warning, m); }
inline void log_error(std::string_view m) { Logger::instance().log(LogLevel::error, m); }

} // namespace exsclaim
