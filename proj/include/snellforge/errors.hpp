#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace snellforge {

// Thrown when an input fails structural, measurability, or schema
// validation. `code()` is a stable machine-readable tag such as
// "ProbabilitySumMismatch" or "HNotPredictable"; what() prepends the tag
// to a human-readable detail string.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// Thrown when an iterative solver exhausts its budget without meeting its
// tolerance. The detail string carries the iteration trace tail so the
// failure is diagnosable from the message alone.
class SolverError : public std::runtime_error {
public:
    SolverError(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace snellforge
