#pragma once

#include <stdexcept>
#include <string>

namespace nesy {

enum class ErrorKind {
    invalid_label,
    domain,
    shape,
    config,
    parse,
    empty_input,
    invariant,
    diverged,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_label: return "invalid-label";
    case ErrorKind::domain:        return "domain";
    case ErrorKind::shape:         return "shape";
    case ErrorKind::config:        return "config";
    case ErrorKind::parse:         return "parse";
    case ErrorKind::empty_input:   return "empty-input";
    case ErrorKind::invariant:     return "invariant";
    case ErrorKind::diverged:      return "training-diverged";
    }
    return "unknown";
}

// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) {
        fail(kind, what);
    }
}

} // namespace nesy
