#pragma once

#include <stdexcept>
#include <string>

namespace dntune {

// I/O failures (unreadable/unwritable files, malformed image data). CLI exit code 1.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Usage and data-availability failures (bad flags, a tuning scheme asked to run
// without the inputs it requires). CLI exit code 2.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dntune
