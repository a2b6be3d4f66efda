#ifndef SPIKETRAIN_STATS_HPP
#define SPIKETRAIN_STATS_HPP

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "spiketrain/errors.hpp"

namespace spiketrain {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  /// Standard error of the slope; zero for two points or an exact fit.
  double slope_stderr = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit_line: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InvalidArgument("fit_line: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw InvalidArgument("fit_line: abscissae are all equal");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - (fit.slope * x[i] + fit.intercept);
      sse += e * e;
    }
    fit.slope_stderr = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

/// Slope of log(y) against log(x); every value must be positive.
inline LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit_loglog: length mismatch");
  std::vector<double> lx(x.size());
  std::vector<double> ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw InvalidArgument("fit_loglog: non-positive value");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace spiketrain

#endif  // SPIKETRAIN_STATS_HPP
