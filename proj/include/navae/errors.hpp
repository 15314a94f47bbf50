#pragma once

#include <stdexcept>
#include <string>

namespace navae {

// Argument outside the mathematical domain of a function (non-finite x,
// p outside (0,1), a <= 1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid configuration: bad rule string, provider spec, tuning values,
// mismatched u, zero replications.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Problems with the data itself: parse failures, non-finite values,
// out-of-support observations, too few observations, degenerate samples.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical procedure could not deliver its contract (non-PD matrix,
// empty feasibility region, unbounded n0, violated internal invariant).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace navae
