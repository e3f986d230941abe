#pragma once

#include <stdexcept>

namespace resokit {

// Error categories map onto CLI exit codes: validation -> 1, fit -> 2, io -> 3.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace resokit
