#pragma once

#include <stdexcept>
#include <string>

namespace wdcusum {

// Values match wdc_status in the C header.
enum class ErrorCode {
    Config = 1,
    Parameter = 2,
    Domain = 3,
    Calibration = 4,
    Censoring = 5,
    Io = 6,
    Budget = 7,
    NullArgument = 8,
    BufferTooSmall = 9,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &message) : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
    throw Error(code, message);
}

} // namespace wdcusum
