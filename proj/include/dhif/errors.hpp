#pragma once

#include <stdexcept>
#include <string>

namespace dhif {

/// Malformed arguments: dimension mismatches, broken type invariants,
/// weight vectors off the simplex, unparseable scenario files.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold (singular F on
/// the information prediction path, measuring with a non-observing sensor).
struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The fused information matrix is singular: the parameter is not jointly
/// identifiable from the given sources.
struct NotIdentifiableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A conversion out of information form was requested for a belief with
/// infinite uncertainty (singular information matrix).
struct InfiniteUncertaintyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The requested problem size is outside what the operation supports.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An aggregation was asked to run over a record set with missing cells.
struct IncompleteDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failures while reading scenarios or writing result tables.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN or infinity surfaced inside a filter update.
struct NumericFaultError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace dhif
