#include "semdup/regression.hpp"

#include <cmath>

#include "semdup/error.hpp"

namespace semdup {

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> weights) {
  if (x.size() != y.size() || (!weights.empty() && weights.size() != x.size())) {
    throw FitError("fit_line: input lengths differ");
  }
  const std::size_t n = x.size();
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w(i) > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw FitError("fit_line: non-finite value or non-positive weight");
    }
    sw += w(i);
    sx += w(i) * x[i];
    sy += w(i) * y[i];
  }
  if (n < 2) throw FitError("fit_line: need at least two points");
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    sxx += w(i) * dx * dx;
    sxy += w(i) * dx * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("fit_line: fewer than two distinct x values");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.n = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    f.rss += w(i) * r * r;
  }
  return f;
}

}  // namespace semdup
