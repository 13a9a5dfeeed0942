#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedbench {

// Bad configuration values, malformed input files, infeasible split requests.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Input that does not parse; carries a 1-based line number when known.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ValidationError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : ValidationError(what) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// Failures while computing: shape mismatches, non-finite values, divergence,
// degenerate statistics. The CLI maps these to exit code 2.
class ComputeError : public std::runtime_error {
public:
    explicit ComputeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fedbench
