#pragma once

#include <istream>
#include <string>

#include "settings.hpp"

namespace wdcli {

struct Result {
    std::string csv;
    int exit_code = 0;
    std::string note; // printed to stderr when non-empty
};

// `in` feeds detect when no input file is set.
Result run_command(const Settings &s, std::istream &in);

} // namespace wdcli
