#pragma once

// Small model builders shared by the simulation tests.

#include <cmath>
#include <numbers>

#include "slowfast/integrators.hpp"

namespace fixture {

inline slowfast::Field sine_profile(const slowfast::Grid1D& grid, double amplitude) {
  slowfast::Field f(grid);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = amplitude * std::sin(std::numbers::pi * grid.node(i));
  return f;
}

/// Burgers slow part with the OU fast part, sine initial data and forcing.
inline slowfast::ModelSpec burgers_ou(std::size_t n, double epsilon, double c_fy = 1.0) {
  const slowfast::Grid1D grid(n);
  slowfast::CouplingSpec c(grid);
  c.f0 = sine_profile(grid, 1.0);
  c.c_fx = -0.5;
  c.c_fy = c_fy;
  c.g1 = slowfast::NoiseSpec{0.5, 8, 0.0};
  c.g2 = slowfast::NoiseSpec{1.0, 8, 0.0};
  return slowfast::ModelSpec{slowfast::SlowOperatorSpec::burgers(0.1),
                             slowfast::FastOperatorSpec::linear_in_x(1.0),
                             c,
                             epsilon,
                             grid,
                             sine_profile(grid, 1.0),
                             slowfast::Field(grid)};
}

inline slowfast::ModelSpec with_slow(slowfast::ModelSpec m, const slowfast::SlowOperatorSpec& slow) {
  m.slow = slow;
  return m;
}

inline slowfast::ModelSpec quiet(slowfast::ModelSpec m) {
  m.coupling.g1.amplitude = 0.0;
  m.coupling.g2.amplitude = 0.0;
  return m;
}

}  // namespace fixture
