#pragma once

#include <stdexcept>
#include <string>

namespace hmoe {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    explicit QuadratureError(const std::string& msg, double achieved_tol)
        : std::runtime_error(msg), achieved_tol(achieved_tol) {}
    double achieved_tol;
};

struct UnsupportedCellSize : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hmoe
