#pragma once

#include <stdexcept>
#include <string>

namespace robustsc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter lies outside its documented domain (negative scale, p > 1, ...).
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Input data violates a structural precondition (length mismatch, too short).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Input is well formed but the statistic is undefined on it (zero energy, all trimmed).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed. The message carries line or byte offset.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace robustsc
