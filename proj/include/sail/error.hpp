#pragma once

#include <stdexcept>
#include <string>

namespace sail {

// Each kind maps to a distinct CLI exit code.
enum class ErrorKind {
    invalid_argument = 2,
    dimension_mismatch = 3,
    io = 4,
    format = 5,
    non_finite = 6,
    config = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace sail
