#pragma once
#include <stdexcept>
#include <string>

namespace dlab {

// Every thrown error carries a stable machine-readable code plus an optional
// config path ("grid.N") so the CLI can emit structured error JSON.
struct Error : std::runtime_error {
    std::string code;
    std::string path;
    Error(std::string code_, const std::string& msg, std::string path_ = "")
        : std::runtime_error(msg), code(std::move(code_)), path(std::move(path_)) {}
};

struct ConfigError : Error {
    ConfigError(const std::string& msg, std::string path_ = "")
        : Error("config", msg, std::move(path_)) {}
};

struct DomainError : Error {
    DomainError(std::string code_, const std::string& msg) : Error(std::move(code_), msg) {}
};

} // namespace dlab
