#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sidebandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using Arm = std::size_t;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on a scalar or structural argument was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A per-arm quantity could not be estimated (singular moment matrix,
/// too few samples, zero behavior frequency).
class ArmError : public Error {
public:
    ArmError(Arm arm, const std::string& what)
        : Error("arm " + std::to_string(arm) + ": " + what), arm_(arm) {}

    Arm arm() const noexcept { return arm_; }

private:
    Arm arm_;
};

}  // namespace sidebandit
