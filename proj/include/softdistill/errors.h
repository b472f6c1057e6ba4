#pragma once

#include <stdexcept>
#include <string>

namespace softdistill {

// Shape or dimension incompatibility between operands.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A tensor operation produced (or was handed) NaN/Inf values.
struct NonFiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training loss went non-finite; surfaced instead of masked.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Teacher failed the generalization-error gate before distillation.
struct TeacherQualityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config file problems: missing/unknown keys, type mismatches.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A stage was invoked before its input artifacts exist.
struct DependencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Wrong magic bytes or malformed payload layout.
struct FormatError : IoError {
    using IoError::IoError;
};

// File ends before the declared payload does.
struct TruncatedError : IoError {
    using IoError::IoError;
};

// Magic matched but the container version is unsupported.
struct VersionError : IoError {
    using IoError::IoError;
};

}  // namespace softdistill
