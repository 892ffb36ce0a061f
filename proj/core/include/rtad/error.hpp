// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rtad {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition (shapes, ranges, empty sets).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Structurally malformed input file, e.g. ragged rows.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A field could not be parsed as a number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Operation requires state that has not been established yet.
class StateError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

} // namespace rtad
