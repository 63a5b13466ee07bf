#pragma once

#include <stdexcept>
#include <string>

namespace sdrift {

// Argument outside the mathematical domain of an operation (x <= 0, p outside (0,1), ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Inputs that are individually valid but violate a precondition of the call.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Quadrature or optimizer failed to meet its tolerance.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Sandwich envelope search exhausted its range.
class ConstructionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or incomplete experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_domain(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

inline void require_usage(bool ok, const std::string& what) {
    if (!ok) throw UsageError(what);
}

}  // namespace detail
}  // namespace sdrift
