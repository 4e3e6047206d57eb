#pragma once

#include <stdexcept>
#include <string>

namespace faraday {

/// Bad configuration or scenario input (CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A numerical procedure failed or a sampling precondition was violated
/// (CLI exit code 3).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File read/write failure (CLI exit code 4).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace faraday
