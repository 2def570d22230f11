#pragma once

#include <stdexcept>
#include <string>

namespace hsdef {

// Base for every error raised by the library. The CLI maps `is_config_error()`
// to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual bool is_config_error() const noexcept { return true; }
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Environment failures such as unwritable output files.
class RuntimeError : public Error {
public:
    using Error::Error;
    bool is_config_error() const noexcept override { return false; }
};

} // namespace hsdef
