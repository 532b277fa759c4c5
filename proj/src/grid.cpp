#include "slowfast/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "slowfast/errors.hpp"

namespace slowfast {

Grid1D::Grid1D(std::size_t n_interior) : n_(n_interior), h_(1.0 / static_cast<double>(n_interior + 1)) {
  if (n_interior < 2) {
    throw ConfigError("Grid1D needs at least 2 interior nodes, got " + std::to_string(n_interior));
  }
}

Field::Field(const Grid1D& grid) : grid_(grid), values_(grid.n_interior(), 0.0) {}

Field::Field(const Grid1D& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid.n_interior()) {
    throw std::invalid_argument("Field: expected " + std::to_string(grid.n_interior()) + " values, got " +
                                std::to_string(values_.size()));
  }
}

bool Field::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) {
    throw std::invalid_argument("field grid mismatch: " + std::to_string(a.grid().n_interior()) + " vs " +
                                std::to_string(b.grid().n_interior()) + " interior nodes");
  }
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

Field& Field::axpy(double c, const Field& other) {
  require_same_grid(*this, other);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += c * other.values_[i];
  return *this;
}

bool Field::operator==(const Field& other) const {
  return grid_ == other.grid_ && values_ == other.values_;
}

NormKind NormKind::lp(double p) {
  if (!(p >= 2.0)) throw std::invalid_argument("Lp norm requires p >= 2, got " + std::to_string(p));
  return NormKind(Tag::Lp, p);
}

double inner(const Field& f, const Field& g) {
  require_same_grid(f, g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return f.grid().h() * s;
}

namespace {

double h1_seminorm_sq(const Field& f) {
  const double h = f.grid().h();
  const std::size_t n = f.size();
  double s = f[0] * f[0] + f[n - 1] * f[n - 1];  // boundary faces
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double d = f[i + 1] - f[i];
    s += d * d;
  }
  return s / h;  // h * sum (d/h)^2
}

}  // namespace

double gradient_lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("gradient_lp_norm requires p >= 1");
  const double h = f.grid().h();
  const std::size_t n = f.size();
  double s = 0.0;
  for (std::size_t face = 0; face <= n; ++face) {
    const double left = face == 0 ? 0.0 : f[face - 1];
    const double right = face == n ? 0.0 : f[face];
    s += std::pow(std::abs((right - left) / h), p);
  }
  return std::pow(h * s, 1.0 / p);
}

double inner_h_minus1(const Field& f, const Field& g) { return inner(poisson_solve(f), g); }

double norm(const Field& f, NormKind kind) {
  switch (kind.tag()) {
    case NormKind::Tag::L2:
      return std::sqrt(inner(f, f));
    case NormKind::Tag::H1_0:
      return std::sqrt(h1_seminorm_sq(f));
    case NormKind::Tag::Lp: {
      const double p = kind.p();
      double s = 0.0;
      for (double v : f.values()) s += std::pow(std::abs(v), p);
      return std::pow(f.grid().h() * s, 1.0 / p);
    }
    case NormKind::Tag::H_minus1:
      return std::sqrt(std::max(0.0, inner_h_minus1(f, f)));
  }
  return 0.0;
}

Field apply_laplacian(const Field& v) {
  const std::size_t n = v.size();
  const double inv_h2 = 1.0 / (v.grid().h() * v.grid().h());
  Field out(v.grid());
  for (std::size_t i = 0; i < n; ++i) {
    const double left = i == 0 ? 0.0 : v[i - 1];
    const double right = i + 1 == n ? 0.0 : v[i + 1];
    out[i] = (2.0 * v[i] - left - right) * inv_h2;
  }
  return out;
}

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  if (lower.size() != n || upper.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_tridiagonal: inconsistent band sizes");
  }
  std::vector<double> c(n), d(n);
  double pivot = diag[0];
  c[0] = upper[0] / pivot;
  d[0] = rhs[0] / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = diag[i] - lower[i] * c[i - 1];
    c[i] = i + 1 < n ? upper[i] / pivot : 0.0;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

Field poisson_solve(const Field& rhs) {
  // Solve the scaled system (-1, 2, -1) u = h^2 rhs, then one step of
  // iterative refinement with the residual accumulated in extended precision.
  const std::size_t n = rhs.size();
  const double h2 = rhs.grid().h() * rhs.grid().h();
  std::vector<double> lower(n, -1.0), diag(n, 2.0), upper(n, -1.0), b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = rhs[i] * h2;
  std::vector<double> u = solve_tridiagonal(lower, diag, upper, b);

  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long double left = i == 0 ? 0.0L : u[i - 1];
    const long double right = i + 1 == n ? 0.0L : u[i + 1];
    const long double lu = (2.0L * u[i] - left - right) / static_cast<long double>(h2);
    r[i] = static_cast<double>((static_cast<long double>(rhs[i]) - lu) * static_cast<long double>(h2));
  }
  const std::vector<double> du = solve_tridiagonal(lower, diag, upper, r);
  for (std::size_t i = 0; i < n; ++i) u[i] += du[i];
  return Field(rhs.grid(), std::move(u));
}

double smallest_eigenvalue(const Grid1D& grid) {
  const double h = grid.h();
  const double s = std::sin(std::numbers::pi * h / 2.0);
  return 4.0 * s * s / (h * h);
}

Field sine_mode(const Grid1D& grid, std::size_t k) {
  if (k == 0 || k > grid.n_interior()) throw std::invalid_argument("sine_mode: k out of range");
  Field e(grid);
  for (std::size_t i = 0; i < grid.n_interior(); ++i) {
    e[i] = std::numbers::sqrt2 * std::sin(static_cast<double>(k) * std::numbers::pi * grid.node(i));
  }
  return e;
}

ShiftedLaplacianSolver::ShiftedLaplacianSolver(const Grid1D& grid, double a) : a_(a) {
  if (!(a >= 0.0)) throw std::invalid_argument("ShiftedLaplacianSolver: shift must be nonnegative");
  const std::size_t n = grid.n_interior();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const double d = 1.0 + 2.0 * a * inv_h2;
  off_ = -a * inv_h2;
  inv_pivot_.resize(n);
  c_prime_.resize(n);
  double pivot = d;
  inv_pivot_[0] = 1.0 / pivot;
  c_prime_[0] = off_ / pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = d - off_ * c_prime_[i - 1];
    inv_pivot_[i] = 1.0 / pivot;
    c_prime_[i] = off_ / pivot;
  }
}

void ShiftedLaplacianSolver::solve_in_place(std::span<double> values) const {
  const std::size_t n = values.size();
  values[0] *= inv_pivot_[0];
  for (std::size_t i = 1; i < n; ++i) values[i] = (values[i] - off_ * values[i - 1]) * inv_pivot_[i];
  for (std::size_t i = n - 1; i-- > 0;) values[i] -= c_prime_[i] * values[i + 1];
}

}  // namespace slowfast
