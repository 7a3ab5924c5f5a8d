#pragma once

#include <stdexcept>
#include <string>

namespace fontauth {

/// Root of every error the toolkit raises. The CLI maps the three branches
/// below onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed something that violates a precondition (bad geometry,
/// out-of-range label, malformed config).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data could not be used: unreadable fonts, corrupted files,
/// inconsistent datasets.
class DataError : public Error {
public:
    using Error::Error;
};

/// A verification step ran and did not hold.
class CheckFailure : public Error {
public:
    using Error::Error;
};

class ShapeError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class FontLoadError : public DataError {
public:
    using DataError::DataError;
};

class MissingGlyph : public DataError {
public:
    using DataError::DataError;
};

class EmptyFontSet : public DataError {
public:
    using DataError::DataError;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class ChecksumError : public DataError {
public:
    using DataError::DataError;
};

/// Training produced a non-finite loss.
class DivergenceError : public DataError {
public:
    using DataError::DataError;
};

} // namespace fontauth
