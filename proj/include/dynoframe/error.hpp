#pragma once

#include <stdexcept>
#include <string>

namespace df {

// Error categories exposed 1:1 through the C API status codes.
enum class errc {
    invalid_argument,
    parse_error,
    io_error,
    validation_error,
    numeric_error,
    internal_error,
};

class Error : public std::runtime_error {
public:
    Error(errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    errc code() const { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) {
    throw Error(code, message);
}

inline const char* errc_name(errc code) {
    switch (code) {
    case errc::invalid_argument: return "E_INVALID";
    case errc::parse_error: return "E_PARSE";
    case errc::io_error: return "E_IO";
    case errc::validation_error: return "E_VALIDATION";
    case errc::numeric_error: return "E_NUMERIC";
    case errc::internal_error: return "E_INTERNAL";
    }
    return "E_INTERNAL";
}

} // namespace df
