#pragma once

#include <stdexcept>
#include <string>

namespace deflect {

// Coarse failure classes; the CLI maps each to an exit code.
enum class ErrorKind { usage, data, numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

// q outside [4, m].
struct InvalidBasisError : NumericError {
    using NumericError::NumericError;
};

// Normal matrix singular (rank-deficient design with no penalty to rescue it).
struct IllPosedFitError : NumericError {
    using NumericError::NumericError;
};

// m - edf too close to zero for the GCV denominator.
struct DegenerateGcvError : NumericError {
    using NumericError::NumericError;
};

struct DimensionMismatchError : DataError {
    using DataError::DataError;
};

}  // namespace deflect
