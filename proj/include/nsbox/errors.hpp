#pragma once

#include <stdexcept>
#include <string>

namespace nsbox {

/// Base class for all nsbox errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Table shape inconsistent with declared sizes, or an index out of range.
struct ShapeError : Error { using Error::Error; };

/// Text that does not parse as a rational number or a system file.
struct ParseError : Error { using Error::Error; };

/// Operation needs a non-signaling system but the input signals.
struct SignalingError : Error { using Error::Error; };

/// A permutation row repeats an image value.
struct InvalidPermutationError : Error { using Error::Error; };

/// A single-use system instance was invoked twice.
struct ConsumedError : Error { using Error::Error; };

/// Rational repair could not stay within the requested tolerance.
struct RationalizeError : Error { using Error::Error; };

/// Enumeration or simulation size cap exceeded; message names the size.
struct ResourceCapError : Error { using Error::Error; };

/// A child source ran out of instances mid-protocol.
struct ExhaustedError : Error { using Error::Error; };

/// Arguments outside an operation's domain (e.g. delta not in (0,1)).
struct DomainError : Error { using Error::Error; };

} // namespace nsbox
