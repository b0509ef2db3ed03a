#pragma once

#include <stdexcept>

namespace flowdetect {

// Base class for every error the library throws.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor or layer shape disagreement.
struct DimensionError : Error {
    using Error::Error;
};

// Input sequence shorter than the operation requires.
struct SequenceError : Error {
    using Error::Error;
};

// Invalid configuration value, empty split, or undefined-metric setup.
struct ConfigError : Error {
    using Error::Error;
};

// API misuse: mismatched forward/backward caches, bad labels, broken
// internal invariants such as non-finite values.
struct ContractError : Error {
    using Error::Error;
};

// CSV schema or row-level parse failure.
struct DataError : Error {
    using Error::Error;
};

// Corrupt, truncated, or version-incompatible serialized file.
struct IntegrityError : Error {
    using Error::Error;
};

}  // namespace flowdetect
