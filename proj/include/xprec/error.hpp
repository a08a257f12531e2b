#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xprec {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input data (malformed rows, broken invariants, bad files).
class DataError : public Error {
public:
    using Error::Error;
};

/// A malformed row in a delimited input file. Carries the 1-based line number.
class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Caller passed an argument outside the operation's domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// The optimizer produced a non-finite objective.
class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Training failed for every candidate regularization strength.
class TrainingFailure : public Error {
public:
    using Error::Error;
};

}  // namespace xprec
