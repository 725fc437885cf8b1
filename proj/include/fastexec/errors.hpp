#pragma once

#include <stdexcept>
#include <string>

namespace fastexec {

// Input/file problems (CLI exit code 3).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver/estimator failures (CLI exit code 4).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fastexec
