#pragma once

#include <stdexcept>
#include <string>

namespace fracwalk {

// Invalid parameters or configuration. The CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// An interval or index outside the sequence it refers to.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Factorization or root-finding failure.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A conditional law that rejection sampling cannot reach within its budget.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed sequence files or JSON documents.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fracwalk
