#pragma once

#include <stdexcept>
#include <string>

namespace spurlex {

/// Error type thrown by all spurlex operations.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spurlex
