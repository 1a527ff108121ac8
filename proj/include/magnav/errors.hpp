#pragma once

#include <stdexcept>
#include <string>

namespace magnav {

/// Bad configuration or unusable input files. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file content; carries the 1-based line number where parsing failed.
class ParseError : public ConfigError {
public:
    ParseError(const std::string& what, std::size_t line)
        : ConfigError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// A position outside the map extent (or other spatial bound).
class BoundsError : public std::runtime_error {
public:
    explicit BoundsError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation touched a nodata cell that poisons its result.
class NodataError : public std::runtime_error {
public:
    explicit NodataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace magnav
