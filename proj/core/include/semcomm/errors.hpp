#pragma once

#include <stdexcept>
#include <string>

namespace semcomm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor extents.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (divisibility, widths, empty datasets).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Index or name not present in a table.
class LookupError : public Error {
public:
    using Error::Error;
};

/// Input is numerically unusable (non-finite values, zero-variance rows where forbidden).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Input too small or otherwise degenerate for the operation.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// Corrupt or truncated container file.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Container version or model configuration digest mismatch.
class VersionError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace semcomm
