#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace colm {

/// Bad or inconsistent configuration. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss or gradient. The CLI maps this to
/// exit code 3.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// A dataset file that does not parse. `line` is 1-based.
class DatasetFormatError : public std::runtime_error {
public:
    DatasetFormatError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace colm
