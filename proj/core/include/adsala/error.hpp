#pragma once

#include <stdexcept>
#include <string>

namespace adsala {

// Error taxonomy. The CLI maps these onto exit codes:
// user/parameter/shape/contract -> 1, resource/io -> 2, data quality -> 3.

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ParamError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Schema/length mismatches between trained artifacts and inputs.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CorruptionError : public IoError {
public:
    using IoError::IoError;
};

class VersionError : public IoError {
public:
    using IoError::IoError;
};

// Sampler could not produce the requested number of distinct shapes.
class ExhaustionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Too many timing records were lost during gathering.
class GatherError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Preprocessing would discard an implausible share of the data.
class DataQualityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace adsala
