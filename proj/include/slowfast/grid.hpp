#pragma once

// Uniform Dirichlet grid on (0,1), nodal fields and the discrete norms of the
// Gelfand triples used by the slow and fast equations.

#include <cstddef>
#include <span>
#include <vector>

namespace slowfast {

class Grid1D {
 public:
  /// Throws ConfigError when n_interior < 2.
  explicit Grid1D(std::size_t n_interior);

  std::size_t n_interior() const { return n_; }
  double h() const { return h_; }
  /// Coordinate of interior node i (0-based), i.e. (i+1)*h.
  double node(std::size_t i) const { return static_cast<double>(i + 1) * h_; }

  bool operator==(const Grid1D& other) const { return n_ == other.n_; }

 private:
  std::size_t n_;
  double h_;
};

/// Nodal values at the interior nodes; boundary values are implicitly zero.
class Field {
 public:
  explicit Field(const Grid1D& grid);
  Field(const Grid1D& grid, std::vector<double> values);

  const Grid1D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool all_finite() const;
  double max_abs() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double c);
  /// this += c * other
  Field& axpy(double c, const Field& other);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double c, Field a) { return a *= c; }

  /// Exact (==) nodal equality on the same grid.
  bool operator==(const Field& other) const;

 private:
  Grid1D grid_;
  std::vector<double> values_;
};

/// Throws std::invalid_argument unless both fields live on the same grid.
void require_same_grid(const Field& a, const Field& b);

class NormKind {
 public:
  enum class Tag { L2, H1_0, H_minus1, Lp };

  static NormKind l2() { return NormKind(Tag::L2, 2.0); }
  static NormKind h1_0() { return NormKind(Tag::H1_0, 2.0); }
  static NormKind h_minus1() { return NormKind(Tag::H_minus1, 2.0); }
  /// Throws std::invalid_argument for p < 2.
  static NormKind lp(double p);

  Tag tag() const { return tag_; }
  double p() const { return p_; }

 private:
  NormKind(Tag tag, double p) : tag_(tag), p_(p) {}
  Tag tag_;
  double p_;
};

/// h * sum_i f_i g_i
double inner(const Field& f, const Field& g);

/// Discrete norms, all carrying the factor h:
///   L2       sqrt(h sum v_i^2)
///   H1_0     sqrt(h sum over faces ((v_{i+1}-v_i)/h)^2), boundary faces included
///   Lp       (h sum |v_i|^p)^(1/p)
///   H_minus1 sqrt(h <v, L^{-1} v>)
double norm(const Field& f, NormKind kind);

/// (h sum over the n+1 faces |(v_{i+1}-v_i)/h|^p)^(1/p), the W^{1,p}_0 norm.
double gradient_lp_norm(const Field& f, double p);

/// Inner product of the H^{-1} space, h <L^{-1} f, g>.
double inner_h_minus1(const Field& f, const Field& g);

/// Discrete Dirichlet negative Laplacian, stencil (-1, 2, -1)/h^2.
Field apply_laplacian(const Field& v);

/// Solves L u = rhs.
Field poisson_solve(const Field& rhs);

/// Smallest eigenvalue of L, (4/h^2) sin^2(pi h / 2).
double smallest_eigenvalue(const Grid1D& grid);

/// k-th discrete sine eigenvector of L, sqrt(2) sin(k pi x_i), unit L2 norm.
Field sine_mode(const Grid1D& grid, std::size_t k);

/// Thomas algorithm for a general tridiagonal system; `lower[0]` and
/// `upper[n-1]` are ignored. Requires a nonsingular system that needs no
/// pivoting (diagonally dominant in our uses).
std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                      std::span<const double> diag,
                                      std::span<const double> upper,
                                      std::span<const double> rhs);

/// Prefactored solver for (I + a L) u = rhs with a >= 0, reused across the
/// many micro steps that share one step size.
class ShiftedLaplacianSolver {
 public:
  ShiftedLaplacianSolver(const Grid1D& grid, double a);

  /// Overwrites `values` (the right-hand side) with the solution.
  void solve_in_place(std::span<double> values) const;
  double shift() const { return a_; }

 private:
  double a_;
  double off_;                     // -a/h^2
  std::vector<double> inv_pivot_;  // 1 / modified diagonal
  std::vector<double> c_prime_;    // modified super-diagonal
};

}  // namespace slowfast
