#pragma once

#include <span>

namespace spde {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope x. Needs two distinct x.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

/// Slope of log y against log x; entries with a non-positive x or y are skipped.
double power_law_exponent(std::span<const double> x, std::span<const double> y);

/// Trapezoid rule over ascending abscissae.
double trapezoid(std::span<const double> x, std::span<const double> y);

}  // namespace spde
