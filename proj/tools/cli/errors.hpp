#pragma once

#include <stdexcept>
#include <string>

namespace wdcli {

// Process exit statuses.
enum Exit : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,
    kCalibration = 3,
    kCensoring = 4,
    kIo = 5,
    kNoAlarm = 10,
};

class CliError : public std::runtime_error {
public:
    CliError(int exit_code, const std::string &what) : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

[[noreturn]] inline void config_error(const std::string &what) { throw CliError(kConfig, what); }

} // namespace wdcli
