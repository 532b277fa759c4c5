#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace slowfast {

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
};

MeanStderr mean_stderr(std::span<const double> values);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares y = slope x + intercept; needs >= 2 points with
/// distinct x. r_squared is 1 when the residual vanishes.
LinearFit fit_linear(std::span<const double> xs, std::span<const double> ys);

class InsufficientPoints : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonpositiveValue : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// OLS on (log x, log y). Throws InsufficientPoints for fewer than 3 points
/// and NonpositiveValue when any coordinate is <= 0.
LinearFit fit_loglog(std::span<const std::pair<double, double>> points);

}  // namespace slowfast
