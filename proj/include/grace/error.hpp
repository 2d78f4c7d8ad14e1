#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace grace {

// All recoverable failures carry a stable machine-readable code next to the
// human-readable message so callers (and the CLI exit-code mapping) can
// dispatch without string matching.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace grace
