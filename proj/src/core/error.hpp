// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace losa {

enum class ErrorCode {
    InvalidArgument,
    Shape,
    Config,
    State,
    Index,
    Io,
    Format,
    Invariant,
};

// Single exception type for the whole library. The code is what the C API
// boundary and the CLI exit paths dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& msg) {
    throw Error(code, msg);
}

inline void require(bool ok, ErrorCode code, const char* msg) {
    if (!ok) throw Error(code, msg);
}

} // namespace losa
