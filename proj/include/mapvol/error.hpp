#pragma once

#include <stdexcept>
#include <string>

namespace mapvol {

/// Malformed input files or series that violate panel invariants.
class DataError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad window, bad horizon, ...).
class PreconditionError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

/// Optimizer failure, singular curvature, positivity violations on a path.
class NumericalError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

/// Bad command line or configuration file.
class UsageError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

}  // namespace mapvol
