#pragma once

#include <stdexcept>
#include <string>

namespace slowfast {

/// Invalid model, scheme or experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A time step produced non-finite values or an implicit solve failed.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Damped Newton did not reach the residual tolerance within the iteration cap.
class NewtonDivergence : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

}  // namespace slowfast
