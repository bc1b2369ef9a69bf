#ifndef PAM_ERRORS_HPP
#define PAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pam {

// Invalid argument to a mathematical operation (t <= 0, negative bandwidth, ...).
struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Rejected configuration (stability violation, bad grid, malformed config file).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A computation failed numerically (non-finite field value, quadrature stall).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Out-of-range index (noise step beyond the horizon, cell beyond the grid).
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Caller broke an interface contract (unpaired samples, mismatched config hash).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

// Not enough usable data to produce the requested estimate.
struct InsufficientDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace pam

#endif
