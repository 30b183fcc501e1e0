#pragma once

#include <stdexcept>
#include <string>

namespace csiloc {

/// Base class for persistence failures (bad files, short reads, ...).
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct bad_magic_error : io_error {
    using io_error::io_error;
};

struct bad_version_error : io_error {
    using io_error::io_error;
};

struct truncated_file_error : io_error {
    using io_error::io_error;
};

/// Non-finite values where finite ones are required (NaN gradients, diverged solves).
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace csiloc
