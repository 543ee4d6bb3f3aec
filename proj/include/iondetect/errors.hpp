#pragma once

#include <stdexcept>
#include <string>

namespace iondetect {

// A numerical precondition was violated.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A configuration document or geometry is malformed.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace iondetect
