#pragma once

#include <stdexcept>
#include <string>

namespace nlt {

// Invalid user-supplied configuration: bad sizes, rates, malformed files.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nlt
