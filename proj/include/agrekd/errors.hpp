#pragma once

#include <stdexcept>
#include <string>

namespace agrekd {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/matrix shape disagreements.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Invalid argument values (tau <= 0, bad fractions, out-of-range labels, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// A documented API contract was violated (non-scalar backward, negative weight, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Required state missing (gradients not populated before flatten_grads, ...).
class StateError : public Error {
public:
    using Error::Error;
};

// Unparseable or corrupt file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

// File format version does not match what this build reads.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

// Dataset-level problems (missing group, inconsistent columns, ...).
class DataError : public Error {
public:
    using Error::Error;
};

// Experiment configuration inconsistencies, including config drift on reuse.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss; message carries epoch/step context.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

// Metric computation failed (empty group, inconsistent group sets, ...).
class MetricError : public Error {
public:
    using Error::Error;
};

}  // namespace agrekd
