// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ysg {

/// Invalid configuration or arguments: bad parameter ranges, malformed
/// config files, shape mismatches.  Mapped to process exit code 1.
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure: non-finite values, solver non-convergence,
/// blow-up during time integration.  Mapped to process exit code 2.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem / serialization failure.  Mapped to process exit code 3.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace ysg
