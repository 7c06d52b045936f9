#pragma once

#include <stdexcept>
#include <string>

namespace scap {

/// Invalid parameters, malformed files or configs. Maps to CLI exit code 1.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure while processing otherwise valid input. Maps to CLI exit code 2.
class runtime_failure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw config_error(what);
    }
}

} // namespace detail
} // namespace scap
