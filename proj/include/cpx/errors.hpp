#pragma once

#include <stdexcept>
#include <string>

namespace cpx {

/// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed argument: wrong dimension, out-of-range index.
class InputError : public Error {
public:
    using Error::Error;
};

/// Inconsistent or invalid configuration (batch larger than data, K < 1, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file does not follow its declared binary format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A precondition of an analysis formula is violated.
class ConstraintError : public Error {
public:
    using Error::Error;
};

/// The method cannot run on the given problem (e.g. exact prox on softmax).
class UnsupportedMethodError : public Error {
public:
    using Error::Error;
};

/// A checker was handed data it was not designed for.
class MisuseError : public Error {
public:
    using Error::Error;
};

/// Something that cannot happen did.
class InternalError : public Error {
public:
    using Error::Error;
};

/// A numeric certificate failed during a run with theory checks enabled.
class TheoryCheckError : public Error {
public:
    using Error::Error;
};

}  // namespace cpx
