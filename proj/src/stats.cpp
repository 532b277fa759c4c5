#include "slowfast/stats.hpp"

#include <cmath>
#include <string>

namespace slowfast {

MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(n);
  if (n < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  return out;
}

LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size()) throw std::invalid_argument("fit_linear: size mismatch");
  if (n < 2) throw InsufficientPoints("fit_linear: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_linear: x values must not all coincide");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

LinearFit fit_loglog(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw InsufficientPoints("fit_loglog: need at least 3 points, got " + std::to_string(points.size()));
  }
  std::vector<double> lx, ly;
  lx.reserve(points.size());
  ly.reserve(points.size());
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw NonpositiveValue("fit_loglog: coordinates must be positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  return fit_linear(lx, ly);
}

}  // namespace slowfast
