#pragma once

#include <stdexcept>
#include <string>

namespace kh {

/// Invalid physical or numerical configuration (maps to CLI exit code 1).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A layer depth 1 ± eps±·zeta reached zero somewhere on the grid.
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Iterative solver stagnation, NaN in a multiplier, and similar failures.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Data outside the range of an operator (e.g. nonzero mean for a Neumann solve).
struct IncompatibleData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace kh
