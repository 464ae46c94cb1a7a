#pragma once

#include <stdexcept>
#include <string>

namespace etdi {

// Base class for all library errors. Verification outcomes (bad signatures,
// policy denials, blocked calls) are returned as values, never thrown; these
// exceptions cover contract violations and operational failures only.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A document contains a value with no canonical byte representation
// (non-finite number, invalid UTF-8) or fails strict parsing.
struct EncodingError : Error {
    using Error::Error;
};

// A value violates a declared invariant of its type.
struct InvariantViolation : Error {
    using Error::Error;
};

struct IdMismatch : Error {
    using Error::Error;
};

struct NotFound : Error {
    using Error::Error;
};

struct StoreIOError : Error {
    using Error::Error;
};

// Granted permissions are not a subset of the declared permissions.
struct SubsetViolation : Error {
    using Error::Error;
};

struct InvalidClaims : Error {
    using Error::Error;
};

struct MalformedScope : Error {
    using Error::Error;
};

struct InvalidPolicy : Error {
    using Error::Error;
};

// A policy condition compared values of incompatible types at evaluation.
struct ConditionTypeError : Error {
    using Error::Error;
};

// Pushing a call whose claimed caller is not the top of the stack.
struct CallerMismatch : Error {
    using Error::Error;
};

// Popping a tool that is not the top of the stack.
struct StackMismatch : Error {
    using Error::Error;
};

// Zero policy documents survived signature verification at load.
struct EmptyStore : Error {
    using Error::Error;
};

struct UnknownScenario : Error {
    using Error::Error;
};

struct UnknownTool : Error {
    using Error::Error;
};

}  // namespace etdi
