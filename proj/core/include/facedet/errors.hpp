#pragma once

#include <stdexcept>

namespace facedet {

/// Malformed input text (config JSON, detection or ground-truth files).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failures: missing files, unwritable targets, failed renames.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A configuration value that violates an invariant.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace facedet
