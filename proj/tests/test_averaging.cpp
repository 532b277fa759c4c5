#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "slowfast/averaging.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/stats.hpp"

using namespace slowfast;

namespace {

double max_z(const FbarEstimate& e, const Field& want) {
  double z = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) z = std::max(z, std::abs(e.value[i] - want[i]) / e.std_error[i]);
  return z;
}

double mean_of(const Field& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i];
  return s / static_cast<double>(f.size());
}

}  // namespace

TEST_CASE("OU oracle on three nodes") {
  ModelSpec m = fixture::burgers_ou(3, 0.1);
  m.coupling.c_fy = 0.7;
  m.fast = FastOperatorSpec::linear_in_x(1.5);
  const Field x(m.grid, {0.3, -1.2, 2.0});
  const Eigen::Vector3d xv = oracle::to_vec(x);
  const Eigen::Vector3d want =
      oracle::to_vec(m.coupling.f0) + m.coupling.c_fx * xv + 0.7 * 1.5 * oracle::dense_laplacian(m.grid).inverse() * xv;
  CHECK(oracle::max_abs_diff(oracle_fbar_ou(x, m), oracle::to_field(m.grid, want)) <= 1e-13);
}

TEST_CASE("decoupled oracle equals the coupling itself") {
  ModelSpec m = fixture::burgers_ou(16, 0.1, 0.0);
  RngStream s(1, 1);
  for (int k = 0; k < 10; ++k) {
    const Field x = oracle::rough_field(m.grid, s);
    const Field y = oracle::rough_field(m.grid, s);
    CHECK(oracle_fbar_ou(x, m) == coupling_F(m.coupling, x, y));
  }
}

TEST_CASE("oracle needs the OU structure") {
  ModelSpec m = fixture::burgers_ou(16, 0.1);
  CHECK(is_ou_model(m));
  m.fast = FastOperatorSpec::smooth_bounded(1.0, 1.0);
  CHECK_FALSE(is_ou_model(m));
  CHECK_THROWS_AS(oracle_fbar_ou(m.x0, m), ConfigError);
  CHECK_THROWS_AS(OuAveragedCoefficient{m}, ConfigError);
  m = fixture::burgers_ou(16, 0.1);
  m.coupling.g2.multiplicative = 0.2;
  CHECK_FALSE(is_ou_model(m));
}

TEST_CASE("frozen run specification") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  const FrozenRunSpec spec = default_frozen_spec(m, m.x0, m.y0);
  CHECK(spec.t_burn == doctest::Approx(8.0 / m.margin()));
  CHECK(spec.t_avg == doctest::Approx(50.0 / m.margin()));
  CHECK(spec.dt_fast == doctest::Approx(0.1 / m.margin()));
  CHECK(spec.n_replicas == 8);
  FrozenRunSpec bad = spec;
  bad.n_replicas = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = spec;
  bad.dt_fast = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("Monte Carlo estimate matches the OU oracle") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  RngStream s(2, 1);
  const Field x = fixture::sine_profile(m.grid, 1.5) + oracle::rough_field(m.grid, s, 0.3);
  const FbarEstimate e = estimate_fbar(m, default_frozen_spec(m, x, m.y0), 77, 5);
  CHECK(e.replicas_used == 8);
  CHECK(e.warnings.empty());
  for (std::size_t i = 0; i < e.std_error.size(); ++i) CHECK(e.std_error[i] > 0.0);
  const double z = max_z(e, oracle_fbar_ou(x, m));
  INFO("max z ", z);
  CHECK(z <= 3.0);
}

TEST_CASE("standard error shrinks with a longer window") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  FrozenRunSpec spec = default_frozen_spec(m, m.x0, m.y0);
  spec.n_replicas = 16;
  const FbarEstimate short_run = estimate_fbar(m, spec, 5, 1);
  spec.t_avg *= 4.0;
  const FbarEstimate long_run = estimate_fbar(m, spec, 5, 2);
  const double ratio = mean_of(short_run.std_error) / mean_of(long_run.std_error);
  INFO("ratio ", ratio);
  // Four times the window halves the error.
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.5);
}

TEST_CASE("estimate does not depend on the initial fast state") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  const FrozenRunSpec a = default_frozen_spec(m, m.x0, Field(m.grid));
  const FrozenRunSpec b = default_frozen_spec(m, m.x0, fixture::sine_profile(m.grid, 5.0));
  const FbarEstimate ea = estimate_fbar(m, a, 11, 1);
  const FbarEstimate eb = estimate_fbar(m, b, 11, 2);
  for (std::size_t i = 0; i < ea.value.size(); ++i) {
    CHECK(std::abs(ea.value[i] - eb.value[i]) <= 3.0 * std::hypot(ea.std_error[i], eb.std_error[i]));
  }
}

TEST_CASE("smooth fast drift gives a finite estimate") {
  ModelSpec m = fixture::burgers_ou(16, 0.1);
  m.fast = FastOperatorSpec::smooth_bounded(1.0, 2.0);
  const FbarEstimate e = estimate_fbar(m, default_frozen_spec(m, m.x0, m.y0), 3, 3);
  CHECK(e.value.all_finite());
  for (std::size_t i = 0; i < e.std_error.size(); ++i) CHECK(e.std_error[i] >= 0.0);
}

TEST_CASE("short burn-in triggers a warning") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  FrozenRunSpec spec = default_frozen_spec(m, m.x0, m.y0);
  spec.t_burn = 1.0 / m.margin();
  const FbarEstimate e = estimate_fbar(m, spec, 4, 4);
  CHECK(e.warnings.size() == 1);
}

TEST_CASE("quiet frozen run sits at the discrete equilibrium") {
  const ModelSpec m = fixture::quiet(fixture::burgers_ou(32, 1.0));
  RngStream s(3, 1);
  const Field x = oracle::rough_field(m.grid, s);
  const Field y_star = m.fast.c_b() * poisson_solve(x);
  const Trajectory t = simulate_frozen(x, y_star, m, 5.0, 0.01, s);
  for (const Field& y : t.states) CHECK(oracle::max_abs_diff(y, y_star) <= 1e-11);
}

TEST_CASE("quiet relaxation rate along the first mode") {
  const ModelSpec m = fixture::quiet(fixture::burgers_ou(32, 1.0));
  RngStream s(3, 2);
  const Field x = oracle::rough_field(m.grid, s);
  const Field y1 = oracle::rough_field(m.grid, s);
  Field y2 = y1;
  y2.axpy(0.5, sine_mode(m.grid, 1));
  const double dt = 0.01;
  const DecayFit fit = ergodicity_decay(x, y1, y2, m, 1.0, dt, s);
  CHECK_FALSE(fit.degenerate);
  const double want = -std::log1p(dt * smallest_eigenvalue(m.grid)) / dt;
  CHECK(fit.slope == doctest::Approx(want).epsilon(1e-6));
  CHECK(fit.r_squared > 0.999999);
}

TEST_CASE("noisy synchronous coupling contracts at the spectral rate") {
  const ModelSpec m = fixture::burgers_ou(32, 1.0);
  RngStream s(3, 3);
  const Field x = oracle::rough_field(m.grid, s);
  const Field y1 = oracle::rough_field(m.grid, s, 2.0);
  const Field y2 = oracle::rough_field(m.grid, s, 2.0);
  const double T = 50.0 / m.margin();
  const DecayFit fit = ergodicity_decay(x, y1, y2, m, T, 0.1 / m.margin(), s);
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.slope <= -0.45 * m.margin());
  CHECK(fit.r_squared >= 0.98);
}

TEST_CASE("identical starts give a degenerate fit") {
  const ModelSpec m = fixture::burgers_ou(16, 1.0);
  RngStream s(3, 4);
  const DecayFit fit = ergodicity_decay(m.x0, m.x0, m.x0, m, 1.0, 0.01, s);
  CHECK(fit.degenerate);
  CHECK_FALSE(fit.reason.empty());
}

TEST_CASE("decay slope does not depend on the initial gap") {
  const ModelSpec m = fixture::burgers_ou(32, 1.0);
  RngStream s(3, 5);
  const Field x = oracle::rough_field(m.grid, s);
  const Field y1 = oracle::rough_field(m.grid, s);
  const Field gap = oracle::rough_field(m.grid, s);
  std::vector<double> slopes;
  for (double amp : {0.1, 1.0, 10.0}) {
    Field y2 = y1;
    y2.axpy(amp, gap);
    RngStream same(3, 6);
    slopes.push_back(ergodicity_decay(x, y1, y2, m, 0.5, 0.01, same).slope);
  }
  CHECK(slopes[0] == doctest::Approx(slopes[1]).epsilon(1e-8));
  CHECK(slopes[2] == doctest::Approx(slopes[1]).epsilon(1e-8));
}

TEST_CASE("frozen run is the fast block in rescaled time") {
  // eps = 1/16, dt_micro = 1/1024: fast step ratio 1/64 in both runs.
  ModelSpec m = fixture::burgers_ou(32, 1.0 / 16.0);
  m.fast = FastOperatorSpec::smooth_bounded(1.0, 2.0);
  SchemeParams p;
  p.dt_macro = 1.0 / 64.0;
  p.dt_fast_target = 1.0 / 64.0;
  FastBlockStepper block(m, p);
  REQUIRE(block.substeps() == 16);
  RngStream s0(4, 1);
  const Field x = oracle::rough_field(m.grid, s0);
  RngStream a(4, 2), b(4, 2);
  const Trajectory frozen = simulate_frozen(x, m.y0, m, 10.0 * 16.0 / 64.0, 1.0 / 64.0, a);
  DrawnIncrements src(b);
  Field y = m.y0;
  for (std::size_t k = 1; k <= 10; ++k) {
    block.advance(x, y, nullptr, src);
    CHECK(oracle::max_abs_diff(y, frozen.states[16 * k]) <= 1e-12);
  }
}

TEST_CASE("averaged drift is Lipschitz") {
  const ModelSpec m = fixture::burgers_ou(32, 0.1);
  const double inv_l1 = 1.0 / smallest_eigenvalue(m.grid);
  const double bound =
      std::max(std::abs(m.coupling.c_fx), std::abs(m.coupling.c_fy) * inv_l1 * std::abs(m.fast.c_b())) * 1.1;
  RngStream s(5, 1);
  double fitted = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Field x1 = oracle::rough_field(m.grid, s, 2.0);
    const Field x2 = (k % 2 == 0) ? oracle::rough_field(m.grid, s, 2.0) : x1 + oracle::rough_field(m.grid, s, 1e-3);
    const double num = norm(oracle_fbar_ou(x1, m) - oracle_fbar_ou(x2, m), NormKind::l2());
    fitted = std::max(fitted, num / norm(x1 - x2, NormKind::l2()));
  }
  INFO("fitted ", fitted, " bound ", bound);
  CHECK(fitted <= bound);
}

TEST_CASE("estimated coefficient memoizes") {
  const ModelSpec m = fixture::burgers_ou(16, 0.1);
  EstimatedAveragedCoefficient fbar(m, 4, 9, 100);
  const Field x = fixture::sine_profile(m.grid, 1.0);
  const Field v1 = fbar(x);
  CHECK(fbar.estimates_computed() == 1);
  CHECK(fbar(x) == v1);
  CHECK(fbar.cache_hits() == 1);
  Field near = x;
  near[3] += 1e-4;
  CHECK(fbar(near) == v1);
  CHECK(fbar.cache_hits() == 2);
  CHECK(fbar.estimates_computed() == 1);
  const Field far = fixture::sine_profile(m.grid, 2.0);
  const Field v2 = fbar(far);
  CHECK(fbar.estimates_computed() == 2);
  CHECK_FALSE(v2 == v1);

  EstimatedAveragedCoefficient again(m, 4, 9, 100);
  CHECK(again(x) == v1);
  CHECK(field_hash(x) == field_hash(Field(x)));
  CHECK(field_hash(x) != field_hash(near));
}

TEST_CASE("fbar CSV layout") {
  const Grid1D g(2);
  FbarEstimate e{Field(g, {1.5, -2.0}), Field(g, {0.25, 0.125}), 1.0, 2, {}};
  std::ostringstream out;
  write_fbar_csv(out, e);
  CHECK(out.str() == "node,value,std_error\n0,1.5,0.25\n1,-2,0.125\n");
}

TEST_CASE("frozen and fast-block terminal moments agree") {
  ModelSpec m = fixture::burgers_ou(16, 0.01);
  m.fast = FastOperatorSpec::smooth_bounded(1.0, 2.0);
  const SchemeParams p;
  FastBlockStepper block(m, p);
  const double tau = block.dt_micro() / m.epsilon;
  const std::size_t blocks = 8;
  const double t_fast = static_cast<double>(blocks * block.substeps()) * tau;
  const Field x = fixture::sine_profile(m.grid, 1.0);
  const std::size_t mid = m.grid.n_interior() / 2;
  const std::size_t replicas = 400;
  std::vector<double> fm(replicas), fs(replicas), bm(replicas), bs(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    RngStream a(6, derive_stream_id(1, r)), b(6, derive_stream_id(2, r));
    const Field yf = simulate_frozen(x, m.y0, m, t_fast, tau, a).states.back();
    DrawnIncrements src(b);
    Field yb = m.y0;
    for (std::size_t k = 0; k < blocks; ++k) block.advance(x, yb, nullptr, src);
    fm[r] = yf[mid];
    fs[r] = yf[mid] * yf[mid];
    bm[r] = yb[mid];
    bs[r] = yb[mid] * yb[mid];
  }
  for (const auto& [u, v] : {std::pair{&fm, &bm}, std::pair{&fs, &bs}}) {
    const MeanStderr a = mean_stderr(*u);
    const MeanStderr b = mean_stderr(*v);
    CHECK(std::abs(a.mean - b.mean) <= 3.0 * std::hypot(a.std_error, b.std_error));
  }
}
