#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square of the log residuals
  double stderr_slope = 0.0;
};

// Least squares of log e against log N.
template <class X, class Y>
SlopeFit fit_slope(const std::vector<std::pair<X, Y>>& pairs) {
  if (pairs.size() < 3) throw PreconditionError("fit_slope: at least three points are required");
  const double n = double(pairs.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pairs) {
    if (!(double(x) > 0.0) || !(double(y) > 0.0)) throw PreconditionError("fit_slope: values must be positive");
    sx += std::log(double(x));
    sy += std::log(double(y));
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (const auto& [x, y] : pairs) {
    const double dx = std::log(double(x)) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(double(y)) - my);
  }
  if (sxx == 0.0) throw PreconditionError("fit_slope: abscissae coincide");
  SlopeFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (const auto& [x, y] : pairs) {
    const double r = std::log(double(y)) - (f.intercept + f.slope * std::log(double(x)));
    ss += r * r;
  }
  f.residual = std::sqrt(ss / n);
  f.stderr_slope = pairs.size() > 2 ? std::sqrt(ss / (n - 2.0) / sxx) : 0.0;
  return f;
}

}  // namespace nelson
