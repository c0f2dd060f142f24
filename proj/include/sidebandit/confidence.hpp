#pragma once

#include <cstdint>

namespace sidebandit {

/// Regularization, confidence level, and the norm bounds that enter the
/// confidence radii.
struct ConfidenceParams {
    double lambda = 1.0;
    double delta = 0.05;
    double sigma = 0.1;
    double S_x = 1.0;   // ||x|| bound
    double S_w = 1.0;   // ||w*|| bound
    double S_xo = 1.0;  // ||P x|| bound
    double S_wo = 1.0;  // ||P w*|| bound
    double alpha = 1.0; // multiplier on the exploration bonus
    double C_B1 = 0.0;  // deconfounder estimation-error constants
    double C_B2 = 0.0;
    std::uint64_t horizon_T = 1;

    /// Throws InvalidArgument naming the first violated field.
    void validate() const;
};

}  // namespace sidebandit
