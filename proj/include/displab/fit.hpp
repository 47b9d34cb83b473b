#pragma once

#include <span>

namespace displab {

/// Log-log power-law regression result.
struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;   // log-space intercept: log y ~ slope*log x + intercept
    double r_squared = 0.0;
    int n_samples = 0;
};

/// Least squares on (log x, log y). Requires >= 3 strictly positive pairs
/// with x spanning at least one decade.
DecayFit fit_decay_exponent(std::span<const double> x, std::span<const double> y);

}  // namespace displab
