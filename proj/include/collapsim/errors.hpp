// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>

namespace collapsim {

// Error taxonomy; the CLI maps these onto its exit codes.
struct invalid_argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Well-formed request that this object cannot serve (e.g. a coordinate metric
// on a support without coordinates, or the oracle asked for a b > 0 chain).
struct unsupported_error : std::logic_error {
    using std::logic_error::logic_error;
};

// Caller violated a documented precondition.
struct precondition_error : std::logic_error {
    using std::logic_error::logic_error;
};

// A state-space or memory guard tripped.
struct resource_limit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A linear solve failed its pivot or residual check.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace collapsim
