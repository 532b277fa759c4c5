#include "slowfast/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_exponent(double p, const char* what) {
  if (!(p >= 2.0) || !std::isfinite(p)) throw ConfigError(std::string(what) + ": exponent p must be >= 2");
}

}  // namespace

SlowOperatorSpec SlowOperatorSpec::porous_medium(double p, double c) {
  require_exponent(p, "porous medium");
  if (!(c > 0.0)) throw ConfigError("porous medium: coefficient c must be positive");
  return SlowOperatorSpec(PorousMedium{p, c});
}

SlowOperatorSpec SlowOperatorSpec::p_laplace(double p) {
  require_exponent(p, "p-Laplace");
  return SlowOperatorSpec(PLaplace{p});
}

SlowOperatorSpec SlowOperatorSpec::burgers(double viscosity) {
  if (!(viscosity > 0.0)) throw ConfigError("Burgers: viscosity must be positive");
  return SlowOperatorSpec(Burgers{viscosity});
}

std::string SlowOperatorSpec::name() const {
  return std::visit(Overloaded{[](const PorousMedium&) { return std::string("porous"); },
                               [](const PLaplace&) { return std::string("plaplace"); },
                               [](const Burgers&) { return std::string("burgers"); }},
                    kind_);
}

NormKind SlowOperatorSpec::state_norm() const {
  return std::holds_alternative<PorousMedium>(kind_) ? NormKind::h_minus1() : NormKind::l2();
}

double SlowOperatorSpec::alpha() const {
  return std::visit(Overloaded{[](const PorousMedium& k) { return k.p; }, [](const PLaplace& k) { return k.p; },
                               [](const Burgers&) { return 2.0; }},
                    kind_);
}

double SlowOperatorSpec::beta() const { return std::holds_alternative<Burgers>(kind_) ? 2.0 : 0.0; }

double SlowOperatorSpec::v_norm(const Field& v) const {
  return std::visit(Overloaded{[&](const PorousMedium& k) { return norm(v, NormKind::lp(k.p)); },
                               [&](const PLaplace& k) { return gradient_lp_norm(v, k.p); },
                               [&](const Burgers&) { return norm(v, NormKind::h1_0()); }},
                    kind_);
}

double SlowOperatorSpec::state_inner(const Field& a, const Field& b) const {
  return std::holds_alternative<PorousMedium>(kind_) ? inner_h_minus1(a, b) : inner(a, b);
}

double psi(const PorousMedium& pm, double s) { return pm.c * s * std::pow(std::abs(s), pm.p - 2.0); }

double psi_derivative(const PorousMedium& pm, double s) {
  return pm.c * (pm.p - 1.0) * std::pow(std::abs(s), pm.p - 2.0);
}

Field burgers_convection(const Field& u) {
  const std::size_t n = u.size();
  const double inv_2h = 1.0 / (2.0 * u.grid().h());
  Field out(u.grid());
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? 0.0 : u[i - 1];
    const double right = i + 1 == n ? 0.0 : u[i + 1];
    const double d_sq = (right * right - left * left) * inv_2h;
    const double d_u = (right - left) * inv_2h;
    out[i] = (d_sq + u[i] * d_u) / 3.0;
  }
  return out;
}

namespace {

Field p_laplace_drift(const PLaplace& k, const Field& u) {
  const std::size_t n = u.size();
  const double h = u.grid().h();
  std::vector<double> flux(n + 1);
  for (std::size_t f = 0; f <= n; ++f) {
    const double left = f == 0 ? 0.0 : u[f - 1];
    const double right = f == n ? 0.0 : u[f];
    const double s = (right - left) / h;
    flux[f] = std::pow(std::abs(s), k.p - 2.0) * s;
  }
  Field out(u.grid());
  for (std::size_t i = 0; i < n; ++i) out[i] = (flux[i + 1] - flux[i]) / h;
  return out;
}

}  // namespace

Field slow_drift(const SlowOperatorSpec& spec, const Field& u) {
  return std::visit(Overloaded{[&](const PorousMedium& k) {
                                 Field psi_u(u.grid());
                                 for (std::size_t i = 0; i < u.size(); ++i) psi_u[i] = psi(k, u[i]);
                                 Field out = apply_laplacian(psi_u);
                                 out *= -1.0;
                                 return out;
                               },
                               [&](const PLaplace& k) { return p_laplace_drift(k, u); },
                               [&](const Burgers& k) {
                                 Field out = apply_laplacian(u);
                                 out *= -k.viscosity;
                                 out += burgers_convection(u);
                                 return out;
                               }},
                    spec.kind());
}

FastOperatorSpec FastOperatorSpec::linear_in_x(double c_b) {
  if (!std::isfinite(c_b)) throw ConfigError("fast spec: c_b must be finite");
  return FastOperatorSpec(B2Kind::LinearInX, c_b, 0.0);
}

FastOperatorSpec FastOperatorSpec::smooth_bounded(double c_b, double b) {
  if (!std::isfinite(c_b)) throw ConfigError("fast spec: c_b must be finite");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("fast spec: amplitude b must be >= 0");
  return FastOperatorSpec(B2Kind::SmoothBounded, c_b, b);
}

std::string FastOperatorSpec::name() const { return kind_ == B2Kind::LinearInX ? "linear" : "smooth"; }

Field b2_term(const FastOperatorSpec& spec, const Field& x, const Field& y) {
  require_same_grid(x, y);
  Field out(x.grid());
  if (spec.b2_kind() == FastOperatorSpec::B2Kind::LinearInX) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec.c_b() * x[i];
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec.c_b() * x[i] + spec.b() * std::sin(y[i]);
  }
  return out;
}

Field fast_drift(const FastOperatorSpec& spec, const Field& x, const Field& y) {
  Field out = apply_laplacian(y);
  out *= -1.0;
  out += b2_term(spec, x, y);
  return out;
}

double NoiseSpec::mode_amplitude(std::size_t k) const {
  const double kk = static_cast<double>(k);
  return amplitude / (kk * kk);
}

double NoiseSpec::trace() const {
  double s = 0.0;
  for (std::size_t k = 1; k <= modes; ++k) {
    const double q = mode_amplitude(k);
    s += q * q;
  }
  return s;
}

double NoiseSpec::lipschitz() const { return std::abs(multiplicative) * std::sqrt(2.0 * trace()); }

double CouplingSpec::lipschitz_F() const { return std::max(std::abs(c_fx), std::abs(c_fy)); }

Field coupling_F(const CouplingSpec& spec, const Field& x, const Field& y) {
  require_same_grid(spec.f0, x);
  require_same_grid(x, y);
  Field out(x.grid());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = spec.f0[i] + spec.c_fx * x[i] + spec.c_fy * y[i];
  return out;
}

NoiseBasis::NoiseBasis(const Grid1D& grid, const NoiseSpec& spec)
    : modes_(spec.modes), n_(grid.n_interior()), multiplicative_(spec.multiplicative) {
  if (spec.modes == 0 || spec.modes > grid.n_interior()) {
    throw ConfigError("noise: mode count must be in [1, n_interior]");
  }
  if (!(spec.amplitude >= 0.0)) throw ConfigError("noise: amplitude must be >= 0");
  scaled_.resize(modes_ * n_);
  for (std::size_t k = 1; k <= modes_; ++k) {
    const Field e = sine_mode(grid, k);
    const double q = spec.mode_amplitude(k);
    for (std::size_t i = 0; i < n_; ++i) scaled_[(k - 1) * n_ + i] = q * e[i];
  }
}

void NoiseBasis::synthesize(std::span<const double> dw, std::span<double> out) const {
  for (std::size_t i = 0; i < n_; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < modes_; ++k) {
    const double c = dw[k];
    const double* row = scaled_.data() + k * n_;
    for (std::size_t i = 0; i < n_; ++i) out[i] += c * row[i];
  }
}

void NoiseBasis::apply_state_factor(std::span<const double> state, std::span<double> inout) const {
  if (multiplicative_ == 0.0) return;
  for (std::size_t i = 0; i < n_; ++i) inout[i] *= 1.0 + multiplicative_ * std::tanh(state[i]);
}

Field noise_increment(const CouplingSpec& spec, NoiseChannel which, double dt, RngStream& stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("noise_increment: dt must be positive");
  const NoiseSpec& ns = which == NoiseChannel::Slow ? spec.g1 : spec.g2;
  const NoiseBasis basis(spec.f0.grid(), ns);
  std::vector<double> dw = gaussian_increments(stream, basis.modes());
  const double sdt = std::sqrt(dt);
  for (double& v : dw) v *= sdt;
  Field out(spec.f0.grid());
  basis.synthesize(dw, out.values());
  return out;
}

double dissipativity_margin(const FastOperatorSpec& fast, const CouplingSpec& coupling, const Grid1D& grid) {
  const double lg = coupling.lipschitz_g2();
  return 2.0 * smallest_eigenvalue(grid) - 2.0 * fast.lipschitz_y() - lg * lg;
}

}  // namespace slowfast
