#pragma once

#include <stdexcept>
#include <string>

namespace adapt {

// Error taxonomy. All conditions named by the operation contracts map to one
// of these so callers (and tests) can catch the precise failure class.

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidLabelError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyDataError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidBoundsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SymmetryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnsupportedLossError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegularizationRequiredError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleRegionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace adapt
