#pragma once

#include <stdexcept>
#include <string>

namespace strainiq {

// Failure classes map 1:1 onto CLI exit codes (see tools/).
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a statistic is undefined (constant series, too few samples).
struct DegeneracyError : std::runtime_error {
    explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace strainiq
