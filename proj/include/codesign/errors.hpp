#pragma once
// Error taxonomy.  The CLI maps these onto exit codes: ConfigError -> 1,
// IoError -> 2, RuntimeFailure -> 3.

#include <stdexcept>
#include <string>

namespace codesign {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or user-supplied input (schemas, sequences, config files).
struct ConfigError : Error {
  using Error::Error;
};

// Filesystem problems: missing, unreadable, or corrupt files.
struct IoError : Error {
  using Error::Error;
};

// Numeric or internal failures at run time.
struct RuntimeFailure : Error {
  using Error::Error;
};

struct SchemaError : ConfigError { using ConfigError::ConfigError; };
struct RangeError : ConfigError { using ConfigError::ConfigError; };
struct LengthError : ConfigError { using ConfigError::ConfigError; };
struct EncodeError : ConfigError { using ConfigError::ConfigError; };
struct DecodeError : ConfigError { using ConfigError::ConfigError; };
struct LoweringError : ConfigError { using ConfigError::ConfigError; };
struct OracleError : ConfigError { using ConfigError::ConfigError; };

struct CapacityError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct InfeasibleError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct ConditioningError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct EmptyResultError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };
struct CollectError : RuntimeFailure { using RuntimeFailure::RuntimeFailure; };

}  // namespace codesign
