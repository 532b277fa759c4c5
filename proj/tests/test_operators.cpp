#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "slowfast/conditions.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/operators.hpp"

using namespace slowfast;

TEST_CASE("spec construction rejects bad parameters") {
  CHECK_THROWS_AS(SlowOperatorSpec::porous_medium(1.5, 1.0), ConfigError);
  CHECK_THROWS_AS(SlowOperatorSpec::porous_medium(3.0, 0.0), ConfigError);
  CHECK_THROWS_AS(SlowOperatorSpec::p_laplace(1.0), ConfigError);
  CHECK_THROWS_AS(SlowOperatorSpec::burgers(0.0), ConfigError);
  CHECK_THROWS_AS(FastOperatorSpec::smooth_bounded(1.0, -0.1), ConfigError);
  CHECK(SlowOperatorSpec::porous_medium(3.0, 1.0).state_norm().tag() == NormKind::Tag::H_minus1);
  CHECK(SlowOperatorSpec::p_laplace(3.0).state_norm().tag() == NormKind::Tag::L2);
  CHECK(SlowOperatorSpec::burgers(0.1).state_norm().tag() == NormKind::Tag::L2);
  CHECK(SlowOperatorSpec::burgers(0.1).alpha() == 2.0);
  CHECK(SlowOperatorSpec::burgers(0.1).beta() == 2.0);
  CHECK(SlowOperatorSpec::p_laplace(4.0).alpha() == 4.0);
  CHECK(SlowOperatorSpec::porous_medium(3.0, 1.0).beta() == 0.0);
}

TEST_CASE("all drifts vanish at zero") {
  const Grid1D g(10);
  for (const auto& spec : {SlowOperatorSpec::porous_medium(3.0, 2.0), SlowOperatorSpec::p_laplace(3.0),
                           SlowOperatorSpec::burgers(0.1)}) {
    CHECK(slow_drift(spec, Field(g)) == Field(g));
  }
  const Field zero(g);
  CHECK(fast_drift(FastOperatorSpec::smooth_bounded(1.0, 2.0), zero, zero) == zero);
}

TEST_CASE("p-Laplace with p = 2 is the Laplacian") {
  RngStream stream(3, 1);
  const Grid1D g(25);
  const Field u = oracle::rough_field(g, stream);
  const Field a = slow_drift(SlowOperatorSpec::p_laplace(2.0), u);
  const Eigen::VectorXd expected = -(oracle::dense_laplacian(g) * oracle::to_vec(u));
  for (std::size_t i = 0; i < u.size(); ++i) {
    CHECK(a[i] == doctest::Approx(expected(static_cast<Eigen::Index>(i))).epsilon(1e-12).scale(1e3));
  }
}

TEST_CASE("Burgers drift on three nodes") {
  const Grid1D g(3);  // h = 1/4
  const auto spec = SlowOperatorSpec::burgers(0.5);
  {
    // L u = 16 (2, 0, -2); convection terms vanish for this odd profile
    const Field a = slow_drift(spec, Field(g, {1.0, 0.0, -1.0}));
    CHECK(a[0] == doctest::Approx(-16.0));
    CHECK(a[1] == doctest::Approx(0.0));
    CHECK(a[2] == doctest::Approx(16.0));
  }
  {
    // u = (1, 2, 3): L u = 16 (0, 0, 4); D(u^2) = (8, 16, -8), u D u = (4, 8, -12)
    const Field a = slow_drift(spec, Field(g, {1.0, 2.0, 3.0}));
    CHECK(a[0] == doctest::Approx(0.0 + 12.0 / 3.0));
    CHECK(a[1] == doctest::Approx(0.0 + 24.0 / 3.0));
    CHECK(a[2] == doctest::Approx(-32.0 - 20.0 / 3.0));
  }
}

TEST_CASE("porous medium drift is minus L psi(u)") {
  const Grid1D g(3);
  const PorousMedium pm{3.0, 2.0};
  const Field u(g, {1.0, -2.0, 0.5});
  const Field a = slow_drift(SlowOperatorSpec::porous_medium(3.0, 2.0), u);
  const Field psi_u(g, {psi(pm, 1.0), psi(pm, -2.0), psi(pm, 0.5)});
  CHECK(psi_u[1] == doctest::Approx(-8.0));
  const Eigen::VectorXd expected = -(oracle::dense_laplacian(g) * oracle::to_vec(psi_u));
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == doctest::Approx(expected(static_cast<Eigen::Index>(i))));
}

TEST_CASE("fast drift examples") {
  const Grid1D g(3);
  const Field x(g, {1.0, -2.0, 3.0});
  CHECK(fast_drift(FastOperatorSpec::linear_in_x(1.0), x, Field(g)) == x);
  const Field y(g, {0.0, std::numbers::pi / 2.0, std::numbers::pi / 6.0});
  const Field ones(g, {1.0, 1.0, 1.0});
  const Field d = fast_drift(FastOperatorSpec::smooth_bounded(1.0, 0.5), ones, y);
  const Eigen::VectorXd ly = oracle::dense_laplacian(g) * oracle::to_vec(y);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(d[i] == doctest::Approx(-ly(static_cast<Eigen::Index>(i)) + 1.0 + 0.5 * std::sin(y[i])));
  }
}

TEST_CASE("psi is monotone and has exact growth") {
  RngStream stream(3, 2);
  for (const PorousMedium pm : {PorousMedium{2.0, 1.0}, PorousMedium{3.0, 0.5}, PorousMedium{4.5, 2.0}}) {
    std::size_t monotone_failures = 0;
    std::size_t growth_failures = 0;
    for (int i = 0; i < 1000000 / 3; ++i) {
      const double s = 5.0 * stream.normal();
      const double t = 5.0 * stream.normal();
      if ((s - t) * (psi(pm, s) - psi(pm, t)) < 0.0) ++monotone_failures;
      const double expected = pm.c * std::pow(std::abs(s), pm.p - 1.0);
      if (std::abs(std::abs(psi(pm, s)) - expected) > 1e-14 * expected) ++growth_failures;
      if (std::abs(s * psi(pm, s) - pm.c * std::pow(std::abs(s), pm.p)) > 1e-12 * pm.c * std::pow(std::abs(s), pm.p)) {
        ++growth_failures;
      }
    }
    CHECK(monotone_failures == 0);
    CHECK(growth_failures == 0);
  }
}

TEST_CASE("discrete integration by parts") {
  RngStream stream(3, 3);
  const Grid1D g(33);
  const double h = g.h();
  for (int trial = 0; trial < 200; ++trial) {
    const Field u = oracle::rough_field(g, stream);
    const Field v = oracle::rough_field(g, stream);
    const double lhs = inner(apply_laplacian(u), v);
    double faces = 0.0;
    for (std::size_t f = 0; f <= u.size(); ++f) {
      const double du = ((f == u.size() ? 0.0 : u[f]) - (f == 0 ? 0.0 : u[f - 1])) / h;
      const double dv = ((f == v.size() ? 0.0 : v[f]) - (f == 0 ? 0.0 : v[f - 1])) / h;
      faces += h * du * dv;
    }
    CHECK(lhs == doctest::Approx(faces).epsilon(1e-12));
  }
}

TEST_CASE("p-Laplace is monotone") {
  RngStream stream(3, 4);
  const Grid1D g(30);
  for (double p : {2.0, 3.0, 4.0}) {
    const auto spec = SlowOperatorSpec::p_laplace(p);
    std::size_t failures = 0;
    for (int i = 0; i < 300; ++i) {
      const Field u = random_smooth_field(g, sample_amplitude(i), stream);
      const Field v = random_smooth_field(g, sample_amplitude(i + 1), stream);
      const Field d = u - v;
      const double pairing = inner(slow_drift(spec, u) - slow_drift(spec, v), d);
      const double scale = norm(slow_drift(spec, u), NormKind::l2()) * norm(d, NormKind::l2()) + 1e-300;
      if (pairing > 1e-12 * scale) ++failures;
    }
    CHECK(failures == 0);
  }
}

TEST_CASE("Burgers convection is skew and the drift coercive") {
  RngStream stream(3, 5);
  const Grid1D g(64);
  const auto spec = SlowOperatorSpec::burgers(0.1);
  for (int i = 0; i < 300; ++i) {
    const Field v = random_smooth_field(g, sample_amplitude(i), stream);
    const Field c = burgers_convection(v);
    const double scale = norm(c, NormKind::l2()) * norm(v, NormKind::l2()) + 1e-300;
    CHECK(std::abs(inner(c, v)) <= 1e-10 * scale);
    const double h1 = norm(v, NormKind::h1_0());
    const double bound = -0.1 * h1 * h1;
    CHECK(inner(slow_drift(spec, v), v) <= bound + 1e-10 * std::max(1.0, std::abs(bound)));
  }
}

TEST_CASE("coupling F") {
  const Grid1D g(8);
  CouplingSpec c(g);
  CHECK(coupling_F(c, Field(g), Field(g)) == Field(g));
  RngStream stream(3, 6);
  c.f0 = oracle::rough_field(g, stream);
  c.c_fx = -0.7;
  c.c_fy = 0.0;
  const Field x = oracle::rough_field(g, stream);
  CHECK(coupling_F(c, x, oracle::rough_field(g, stream)) == coupling_F(c, x, oracle::rough_field(g, stream)));

  c.c_fy = 1.3;
  CHECK(c.lipschitz_F() == doctest::Approx(1.3));
  std::size_t failures = 0;
  for (int i = 0; i < 100; ++i) {
    const Field x1 = oracle::rough_field(g, stream), x2 = oracle::rough_field(g, stream);
    const Field y1 = oracle::rough_field(g, stream), y2 = oracle::rough_field(g, stream);
    const double lhs = norm(coupling_F(c, x1, y1) - coupling_F(c, x2, y2), NormKind::l2());
    const double rhs = c.lipschitz_F() * (norm(x1 - x2, NormKind::l2()) + norm(y1 - y2, NormKind::l2()));
    if (lhs > rhs * (1.0 + 1e-14)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("noise increments") {
  const Grid1D g(32);
  CouplingSpec c(g);
  c.g1 = NoiseSpec{0.0, 4, 0.0};
  c.g2 = NoiseSpec{0.8, 6, 0.0};
  RngStream s0(4, 1);
  CHECK(noise_increment(c, NoiseChannel::Slow, 0.1, s0) == Field(g));

  RngStream a(4, 2), b(4, 2);
  CHECK(noise_increment(c, NoiseChannel::Fast, 0.01, a) == noise_increment(c, NoiseChannel::Fast, 0.01, b));

  const double dt = 0.01;
  const std::size_t N = 100000;
  RngStream s(4, 4);
  std::vector<double> energy(N);
  std::vector<std::vector<double>> coeff(c.g2.modes, std::vector<double>(N));
  for (std::size_t n = 0; n < N; ++n) {
    const Field w = noise_increment(c, NoiseChannel::Fast, dt, s);
    energy[n] = inner(w, w);
    for (std::size_t k = 1; k <= c.g2.modes; ++k) coeff[k - 1][n] = inner(w, sine_mode(g, k));
  }
  double mean = 0.0;
  for (double e : energy) mean += e;
  mean /= N;
  double var = 0.0;
  for (double e : energy) var += (e - mean) * (e - mean);
  const double se = std::sqrt(var / (N - 1) / N);
  CHECK(std::abs(mean - dt * c.g2.trace()) < 3.0 * se);

  // Per-mode variance: chi-square with N degrees of freedom at the 99% level.
  const double z99 = 2.5758;
  for (std::size_t k = 1; k <= c.g2.modes; ++k) {
    const double q = c.g2.mode_amplitude(k);
    double chi2 = 0.0;
    for (double v : coeff[k - 1]) chi2 += v * v / (q * q * dt);
    const double z = (chi2 - static_cast<double>(N)) / std::sqrt(2.0 * N);
    CHECK(std::abs(z) < z99);
  }
}

TEST_CASE("noise basis validation") {
  const Grid1D g(4);
  CHECK_THROWS_AS(NoiseBasis(g, NoiseSpec{1.0, 5, 0.0}), ConfigError);
  CHECK_THROWS_AS(NoiseBasis(g, NoiseSpec{1.0, 0, 0.0}), ConfigError);
  CHECK_THROWS_AS(NoiseBasis(g, NoiseSpec{-1.0, 2, 0.0}), ConfigError);
  CHECK(NoiseSpec{1.0, 2, 0.0}.trace() == doctest::Approx(1.0 + 1.0 / 16.0));
  CHECK(NoiseSpec{1.0, 2, 0.0}.lipschitz() == 0.0);
  CHECK(NoiseSpec{1.0, 2, 0.5}.lipschitz() == doctest::Approx(0.5 * std::sqrt(2.0 * (1.0 + 1.0 / 16.0))));
}

TEST_CASE("dissipativity margin") {
  const Grid1D g(255);
  CouplingSpec c(g);
  c.g2 = NoiseSpec{1.0, 8, 0.0};
  const double margin = dissipativity_margin(FastOperatorSpec::linear_in_x(1.0), c, g);
  CHECK(margin == doctest::Approx(2.0 * smallest_eigenvalue(g)));
  CHECK(margin == doctest::Approx(2.0 * std::numbers::pi * std::numbers::pi).epsilon(1e-3));
  const double l1 = smallest_eigenvalue(g);
  CHECK(dissipativity_margin(FastOperatorSpec::smooth_bounded(1.0, l1 + 1.0), c, g) < 0.0);
  double previous = margin;
  for (double b : {0.5, 1.0, 2.0, 4.0}) {
    const double m = dissipativity_margin(FastOperatorSpec::smooth_bounded(1.0, b), c, g);
    CHECK(m < previous);
    previous = m;
  }
  c.g2.multiplicative = 0.5;
  CHECK(dissipativity_margin(FastOperatorSpec::linear_in_x(1.0), c, g) ==
        doctest::Approx(2.0 * l1 - c.g2.lipschitz() * c.g2.lipschitz()));
}
