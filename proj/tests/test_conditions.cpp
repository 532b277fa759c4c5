#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "slowfast/conditions.hpp"
#include "slowfast/errors.hpp"

using namespace slowfast;

namespace {

const ConditionId kSlowIds[] = {ConditionId::A2_local_monotone, ConditionId::A3_coercive, ConditionId::A4_growth};
const ConditionId kFastIds[] = {ConditionId::B2_dissipative, ConditionId::B3_coercive, ConditionId::B4_growth};

ConditionContext context(const Grid1D& g, std::optional<SlowOperatorSpec> slow, std::optional<FastOperatorSpec> fast) {
  CouplingSpec c(g);
  c.g1 = NoiseSpec{0.5, 8, 0.0};
  c.g2 = NoiseSpec{1.0, 8, 0.0};
  return ConditionContext{g, slow, fast, c};
}

}  // namespace

TEST_CASE("dual gradient norm") {
  RngStream stream(8, 1);
  const Grid1D g(20);
  // q = 2: the dual of the discrete H1_0 norm is the H^-1 norm.
  for (int i = 0; i < 20; ++i) {
    const Field f = oracle::rough_field(g, stream);
    CHECK(dual_gradient_norm(f, 2.0) == doctest::Approx(norm(f, NormKind::h_minus1())).epsilon(1e-9));
  }
  // General q: brute-force minimum over the additive constant.
  for (double q : {3.0, 4.0}) {
    const Field f = oracle::rough_field(g, stream);
    const double h = g.h();
    const double qd = q / (q - 1.0);
    std::vector<double> flux(g.n_interior() + 1, 0.0);
    for (std::size_t i = 0; i < f.size(); ++i) flux[i + 1] = flux[i] - h * f[i];
    double best = std::numeric_limits<double>::infinity();
    const double lo = *std::min_element(flux.begin(), flux.end());
    const double hi = *std::max_element(flux.begin(), flux.end());
    for (int k = 0; k <= 200000; ++k) {
      const double c = lo + (hi - lo) * k / 200000.0;
      double s = 0.0;
      for (double v : flux) s += std::pow(std::abs(v - c), qd);
      best = std::min(best, std::pow(h * s, 1.0 / qd));
    }
    CHECK(dual_gradient_norm(f, q) == doctest::Approx(best).epsilon(1e-8));
    // Duality pairing bound: <f, v> <= ||f||_* ||grad v||_q.
    for (int k = 0; k < 50; ++k) {
      const Field v = oracle::rough_field(g, stream);
      CHECK(std::abs(inner(f, v)) <= dual_gradient_norm(f, q) * gradient_lp_norm(v, q) * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("zero violations for the catalog models") {
  const Grid1D g(64);
  std::size_t index = 0;
  for (const auto& slow : {SlowOperatorSpec::porous_medium(3.0, 1.0), SlowOperatorSpec::p_laplace(3.0),
                           SlowOperatorSpec::p_laplace(2.0), SlowOperatorSpec::burgers(0.1)}) {
    for (ConditionId id : kSlowIds) {
      RngStream stream(8, 100 + index++);
      const ConditionReport r = check_condition(id, context(g, slow, std::nullopt), 500, stream);
      INFO(slow.name(), " ", to_string(id), " worst ", r.worst_margin);
      CHECK(r.samples == 500);
      CHECK(r.violations == 0);
      CHECK(r.worst_margin > 0.0);
    }
  }
  for (const auto& fast : {FastOperatorSpec::linear_in_x(1.0), FastOperatorSpec::smooth_bounded(1.0, 1.0)}) {
    for (ConditionId id : kFastIds) {
      RngStream stream(8, 200 + index++);
      const ConditionReport r = check_condition(id, context(g, std::nullopt, fast), 500, stream);
      INFO(fast.name(), " ", to_string(id), " worst ", r.worst_margin);
      CHECK(r.violations == 0);
    }
  }
}

TEST_CASE("p-Laplace p = 2 is globally monotone") {
  const Grid1D g(32);
  RngStream stream(8, 2);
  const ConditionReport r =
      check_condition(ConditionId::A2_local_monotone, context(g, SlowOperatorSpec::p_laplace(2.0), std::nullopt), 500, stream);
  CHECK(r.violations == 0);
  CHECK(r.fitted_constants.at("C") == 0.0);
  CHECK(r.fitted_constants.at("rho_ratio_max") <= 1e-9);
}

TEST_CASE("Burgers local monotonicity with a fitted constant") {
  const Grid1D g(64);
  RngStream stream(8, 3);
  const ConditionReport r =
      check_condition(ConditionId::A2_local_monotone, context(g, SlowOperatorSpec::burgers(0.1), std::nullopt), 500, stream);
  CHECK(r.violations == 0);
  CHECK(r.fitted_constants.at("C") == doctest::Approx(2.0 * r.fitted_constants.at("C_fit")));
  CHECK(r.fitted_constants.at("C_fit") > 0.0);
}

TEST_CASE("B2 rate for the linear fast drift") {
  const Grid1D g(64);
  RngStream stream(8, 4);
  const ConditionReport r =
      check_condition(ConditionId::B2_dissipative, context(g, std::nullopt, FastOperatorSpec::linear_in_x(1.0)), 500, stream);
  CHECK(r.violations == 0);
  const double lambda1 = smallest_eigenvalue(g);
  CHECK(r.fitted_constants.at("gamma_ref") == doctest::Approx(2.0 * lambda1));
  CHECK(r.fitted_constants.at("gamma_hat") >= 0.95 * 2.0 * lambda1);

  RngStream stream2(8, 5);
  const ConditionReport s = check_condition(
      ConditionId::B2_dissipative, context(g, std::nullopt, FastOperatorSpec::smooth_bounded(1.0, 3.0)), 500, stream2);
  CHECK(s.violations == 0);
  CHECK(s.fitted_constants.at("gamma_hat") >= 0.95 * (2.0 * lambda1 - 6.0));
}

TEST_CASE("engineered dissipativity violation") {
  const Grid1D g(64);
  const double b = smallest_eigenvalue(g) + 1.0;
  RngStream stream(8, 6);
  const ConditionReport r =
      check_condition(ConditionId::B2_dissipative, context(g, std::nullopt, FastOperatorSpec::smooth_bounded(1.0, b)), 500, stream);
  CHECK(r.violations >= 1);
  CHECK(r.worst_margin <= 0.0);
  CHECK(r.fitted_constants.at("gamma_ref") < 0.0);
}

TEST_CASE("multiplicative noise enters the checks") {
  const Grid1D g(32);
  auto ctx = context(g, SlowOperatorSpec::p_laplace(3.0), FastOperatorSpec::linear_in_x(1.0));
  ctx.coupling.g1.multiplicative = 0.5;
  ctx.coupling.g2.multiplicative = 0.5;
  RngStream s1(8, 7);
  const ConditionReport a2 = check_condition(ConditionId::A2_local_monotone, ctx, 300, s1);
  CHECK(a2.violations == 0);
  RngStream s2(8, 8);
  const ConditionReport b2 = check_condition(ConditionId::B2_dissipative, ctx, 300, s2);
  CHECK(b2.violations == 0);
  CHECK(b2.fitted_constants.at("gamma_ref") ==
        doctest::Approx(2.0 * smallest_eigenvalue(g) - std::pow(ctx.coupling.g2.lipschitz(), 2)));

  auto pm = context(g, SlowOperatorSpec::porous_medium(3.0, 1.0), std::nullopt);
  pm.coupling.g1.multiplicative = 0.5;
  RngStream s3(8, 9);
  CHECK_THROWS_AS(check_condition(ConditionId::A2_local_monotone, pm, 10, s3), ConfigError);
}

TEST_CASE("report invariants and argument checks") {
  const Grid1D g(16);
  RngStream stream(8, 10);
  for (ConditionId id : kSlowIds) {
    const ConditionReport r = check_condition(id, context(g, SlowOperatorSpec::burgers(0.2), std::nullopt), 30, stream);
    CHECK(r.violations <= r.samples);
    if (r.worst_margin <= 0.0) CHECK(r.violations >= 1);
  }
  CHECK_THROWS_AS(check_condition(ConditionId::A3_coercive, context(g, std::nullopt, FastOperatorSpec::linear_in_x(1.0)), 5, stream),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_condition(ConditionId::B3_coercive, context(g, SlowOperatorSpec::burgers(0.2), std::nullopt), 5, stream),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_condition(ConditionId::B3_coercive, context(g, std::nullopt, FastOperatorSpec::linear_in_x(1.0)), 0, stream),
                  std::invalid_argument);
  auto mismatched = context(g, SlowOperatorSpec::burgers(0.2), std::nullopt);
  mismatched.grid = Grid1D(17);
  CHECK_THROWS_AS(check_condition(ConditionId::A3_coercive, mismatched, 5, stream), std::invalid_argument);
}

TEST_CASE("same stream gives the same report") {
  const Grid1D g(32);
  RngStream a(8, 11), b(8, 11);
  const auto ctx = context(g, SlowOperatorSpec::burgers(0.1), std::nullopt);
  const ConditionReport ra = check_condition(ConditionId::A4_growth, ctx, 100, a);
  const ConditionReport rb = check_condition(ConditionId::A4_growth, ctx, 100, b);
  CHECK(ra.worst_margin == rb.worst_margin);
  CHECK(ra.fitted_constants == rb.fitted_constants);
}
