#pragma once

#include <cstddef>
#include <span>

namespace semdup {

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double rss = 0.0;  // (weighted) residual sum of squares
  std::size_t n = 0;
};

// Least squares y ~ intercept + slope * x, optionally weighted.
// Throws FitError when fewer than two distinct x values are present.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights = {});

}  // namespace semdup
