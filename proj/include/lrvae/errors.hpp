// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lrvae {

// Error taxonomy. Each class maps to a distinct process exit code in the CLI.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed file contents (bad magic, bad version).
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Declared and actual byte counts disagree.
struct LengthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_config = 3,
    exit_io = 4,
    exit_format = 5,
    exit_length = 6,
    exit_shape = 7,
    exit_numeric = 8,
    exit_contract = 9,
};

}  // namespace lrvae
