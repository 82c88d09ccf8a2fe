#pragma once

#include <stdexcept>
#include <string>

namespace medcap {

// Exit-code mapping used by the CLI: config/validation -> 2, backend -> 3,
// scoring -> 4.
enum class ErrorKind { config, validation, backend, scoring };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
            case ErrorKind::backend: return 3;
            case ErrorKind::scoring: return 4;
            default: return 2;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_validation(const std::string& msg) { throw Error(ErrorKind::validation, msg); }
[[noreturn]] inline void throw_backend(const std::string& msg) { throw Error(ErrorKind::backend, msg); }
[[noreturn]] inline void throw_scoring(const std::string& msg) { throw Error(ErrorKind::scoring, msg); }

}  // namespace medcap
