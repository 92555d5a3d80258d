#pragma once

#include <stdexcept>

namespace matic {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataMissingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// CLI exit codes; 0 is success.
enum ExitCode {
    exit_ok = 0,
    exit_config_error = 2,
    exit_data_missing = 3,
    exit_divergence = 4,
};

} // namespace matic
