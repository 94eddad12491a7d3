#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jmmle {

enum class ErrorKind {
    InvalidArgument,
    ShapeMismatch,
    NonFinite,
    OverlappingGroups,
    IncompleteCover,
    IndexOutOfRange,
    MaxIterExceeded,
    NotPD,
    NoConverge,
    DegenerateProjection,
    DegenerateVariance,
    ZeroTruth,
    KMismatch,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Exception carrying a machine-readable kind. The CLI maps kinds onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace jmmle
