#pragma once

// Catalog of discretized drift and noise coefficients for the slow-fast
// system
//   dX = [A(X) + F(X, Y)] dt + G1(X) dW1
//   dY = (1/eps) [-L Y + B2(X, Y)] dt + (1/sqrt(eps)) G2(Y) dW2
// on the uniform Dirichlet grid.

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "slowfast/grid.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

/// Psi(s) = c s |s|^{p-2}; slow drift Laplacian of Psi(u).
struct PorousMedium {
  double p;
  double c;
};

/// div(|grad u|^{p-2} grad u).
struct PLaplace {
  double p;
};

/// viscosity * Laplacian(u) + u u_x.
struct Burgers {
  double viscosity;
};

class SlowOperatorSpec {
 public:
  using Kind = std::variant<PorousMedium, PLaplace, Burgers>;

  static SlowOperatorSpec porous_medium(double p, double c);
  static SlowOperatorSpec p_laplace(double p);
  static SlowOperatorSpec burgers(double viscosity);

  const Kind& kind() const { return kind_; }
  std::string name() const;

  /// H1 of the Gelfand triple: H^{-1} for porous medium, L2 otherwise.
  NormKind state_norm() const;
  /// Coercivity exponent: p for porous medium and p-Laplace, 2 for Burgers.
  double alpha() const;
  /// Exponent of the H1 factor in the local monotonicity bound.
  double beta() const;
  /// Norm of V1: Lp for porous medium, W^{1,p}_0 for p-Laplace, H1_0 for Burgers.
  double v_norm(const Field& v) const;
  /// Inner product of H1.
  double state_inner(const Field& a, const Field& b) const;

 private:
  explicit SlowOperatorSpec(Kind kind) : kind_(kind) {}
  Kind kind_;
};

double psi(const PorousMedium& pm, double s);
double psi_derivative(const PorousMedium& pm, double s);

/// Discrete slow drift A(u).
Field slow_drift(const SlowOperatorSpec& spec, const Field& u);

/// Burgers convection in energy-conserving split form,
/// (1/3) D(u^2) + (1/3) u D(u) with central differences D.
Field burgers_convection(const Field& u);

class FastOperatorSpec {
 public:
  enum class B2Kind { LinearInX, SmoothBounded };

  /// B2(x, y) = c_b x
  static FastOperatorSpec linear_in_x(double c_b);
  /// B2(x, y) = c_b x + b sin(y), b >= 0
  static FastOperatorSpec smooth_bounded(double c_b, double b);

  B2Kind b2_kind() const { return kind_; }
  double c_b() const { return c_b_; }
  double b() const { return b_; }
  /// Lipschitz constant of B2 in y.
  double lipschitz_y() const { return kind_ == B2Kind::LinearInX ? 0.0 : b_; }
  std::string name() const;

 private:
  FastOperatorSpec(B2Kind kind, double c_b, double b) : kind_(kind), c_b_(c_b), b_(b) {}
  B2Kind kind_;
  double c_b_;
  double b_;
};

/// Nodewise B2(x, y).
Field b2_term(const FastOperatorSpec& spec, const Field& x, const Field& y);

/// -L y + B2(x, y); the 1/eps factor belongs to the integrator.
Field fast_drift(const FastOperatorSpec& spec, const Field& x, const Field& y);

/// Truncated cylindrical noise: mode k of the discrete sine basis carries
/// amplitude/k^2. With `multiplicative` = s != 0 the increment is multiplied
/// nodewise by 1 + s tanh(state).
struct NoiseSpec {
  double amplitude = 0.0;
  std::size_t modes = 1;
  double multiplicative = 0.0;

  double mode_amplitude(std::size_t k) const;
  /// sum_k (amplitude/k^2)^2, the trace of the truncated covariance.
  double trace() const;
  /// Hilbert-Schmidt Lipschitz constant in L2, s sqrt(2 trace).
  double lipschitz() const;
  bool additive() const { return multiplicative == 0.0; }
};

struct CouplingSpec {
  explicit CouplingSpec(const Grid1D& grid) : f0(grid) {}

  Field f0;
  double c_fx = 0.0;
  double c_fy = 0.0;
  NoiseSpec g1;
  NoiseSpec g2;

  double lipschitz_F() const;
  double lipschitz_g2() const { return g2.lipschitz(); }
};

/// F(x, y) = f0 + c_fx x + c_fy y nodewise.
Field coupling_F(const CouplingSpec& spec, const Field& x, const Field& y);

enum class NoiseChannel { Slow, Fast };

/// Precomputed q_k e_k for one noise channel.
class NoiseBasis {
 public:
  NoiseBasis(const Grid1D& grid, const NoiseSpec& spec);

  std::size_t modes() const { return modes_; }
  bool additive() const { return multiplicative_ == 0.0; }

  /// out = sum_k q_k dw_k e_k
  void synthesize(std::span<const double> dw, std::span<double> out) const;
  /// out *= 1 + s tanh(state); no-op for additive noise.
  void apply_state_factor(std::span<const double> state, std::span<double> inout) const;

 private:
  std::size_t modes_;
  std::size_t n_;
  double multiplicative_;
  std::vector<double> scaled_;  // mode-major, q_k e_k(i)
};

/// Additive increment sum_k q_k sqrt(dt) xi_k e_k of the requested channel.
Field noise_increment(const CouplingSpec& spec, NoiseChannel which, double dt, RngStream& stream);

/// 2 lambda_1 - 2 Lip_y(B2) - Lip(G2)^2; nonpositive means the fast equation
/// is not known to be dissipative.
double dissipativity_margin(const FastOperatorSpec& fast, const CouplingSpec& coupling, const Grid1D& grid);

}  // namespace slowfast
