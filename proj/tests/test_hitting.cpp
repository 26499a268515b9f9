#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "reach/errors.hpp"
#include "reach/hitting.hpp"
#include "reach/linear.hpp"
#include "reach/models.hpp"

using namespace reach;

namespace {

const Diffusion& ou() {
  static const Diffusion d = to_diffusion(ou_1d(1.0));
  return d;
}

IntegratorConfig bridged() {
  IntegratorConfig cfg;
  cfg.bridge_correction = true;
  return cfg;
}

}  // namespace

TEST_CASE("MFET from the boundary is zero") {
  const MfetEstimate m = estimate_mfet(ou(), norm_ball(1.0), 0.5, State{1.0}, 50, IntegratorConfig{}, 1);
  CHECK(m.mean == 0.0);
  CHECK(m.std_error == 0.0);
  CHECK(m.n == 50);
}

TEST_CASE("pendulum MFET is positive and reproducible across thread counts") {
  const auto model = load_model("double-pendulum");
  const DomainSpec& d2 = model.domains.at("D2");
  const MfetEstimate a = estimate_mfet(model.diffusion, d2, 1.0, model.equilibrium, 120, IntegratorConfig{}, 42, 1);
  const MfetEstimate b = estimate_mfet(model.diffusion, d2, 1.0, model.equilibrium, 120, IntegratorConfig{}, 42, 3);
  CHECK(std::isfinite(a.mean));
  CHECK(a.mean > 0.0);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK_FALSE(a.lower_bound());
}

TEST_CASE("trial results keep trial order") {
  const std::vector<DomainSpec> sets{norm_ball(1.0)};
  const auto one = run_trials(ou(), State{0.0}, 0.5, IntegratorConfig{}, sets, 16, 5, 1);
  const auto many = run_trials(ou(), State{0.0}, 0.5, IntegratorConfig{}, sets, 16, 5, 4);
  REQUIRE(one.size() == many.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].tau == many[i].tau);
    CHECK(one[i].exit_state == many[i].exit_state);
  }
  NoiseStream third(5, 3);
  CHECK(simulate_until(ou(), State{0.0}, 0.5, IntegratorConfig{}, sets, third).tau == one[3].tau);
}

TEST_CASE("timeouts turn the MFET into a flagged lower bound") {
  IntegratorConfig cfg;
  cfg.t_max = 0.05;
  const MfetEstimate m = estimate_mfet(ou(), norm_ball(1.0), 0.5, State{0.0}, 100, cfg, 3);
  CHECK(m.timeout_count > 0);
  CHECK(m.lower_bound());

  const std::vector<DomainSpec> sets{norm_ball(1.0)};
  for (const HittingResult& r : run_trials(ou(), State{0.0}, 0.5, cfg, sets, 100, 3)) {
    CHECK(r.tau >= 0.0);
    CHECK(r.tau <= cfg.t_max);
    CHECK(r.timed_out() == (r.tau == cfg.t_max));
  }
}

TEST_CASE("divergent trials report their trial id") {
  const Diffusion blow("blow", [](std::span<const double> x, std::span<double> f) { f[0] = 1e308 * x[0] * x[0]; },
                       Matrix{{1.0}});
  DomainSpec everywhere;
  everywhere.level = [](std::span<const double>) { return -1.0; };
  try {
    estimate_mfet(blow, everywhere, 1.0, State{0.5}, 4, IntegratorConfig{}, 1);
    FAIL("expected divergence");
  } catch (const DivergedError& e) {
    CHECK(std::string(e.what()).find("trial 0") != std::string::npos);
  }
}

TEST_CASE("hitting probability edge cases") {
  const DomainSpec b = above(0, 1.0);
  const HitProbEstimate inside = estimate_hitting_prob(ou(), b, 5.0, 0.5, State{2.0}, 20, IntegratorConfig{}, 1);
  CHECK(inside.p == 1.0);
  CHECK(inside.value == 0.0);

  const HitProbEstimate none = estimate_hitting_prob(ou(), b, 0.0, 0.5, State{0.0}, 20, IntegratorConfig{}, 1);
  CHECK(none.p == 0.0);
  CHECK(none.value == std::numeric_limits<double>::infinity());

  CHECK(log_transform_value(0.5, 0.2) == doctest::Approx(-0.2 * std::log(0.5)));
}

TEST_CASE("hitting probability is monotone in the horizon") {
  const DomainSpec b = above(0, 1.0);
  double last = 0.0, last_value = std::numeric_limits<double>::infinity();
  for (double horizon : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    const HitProbEstimate e = estimate_hitting_prob(ou(), b, horizon, 0.5, State{0.0}, 400, IntegratorConfig{}, 17);
    CHECK(e.p >= last);
    CHECK(e.value <= last_value);
    last = e.p;
    last_value = e.value;
  }
}

TEST_CASE("OU hitting probability matches the parabolic oracle") {
  const double target = oracle::hitting_probability([](double x) { return -x; }, 0.5, -6.0, 1.0, 5.0, 0.0);
  const HitProbEstimate e = estimate_hitting_prob(ou(), above(0, 1.0), 5.0, 0.5, State{0.0}, 10000, bridged(), 99);
  INFO("p " << e.p << " stderr " << e.std_error << " oracle " << target);
  CHECK(std::abs(e.p - target) <= 3.0 * e.std_error);
  CHECK(e.value == doctest::Approx(-0.5 * std::log(e.p)));
}

TEST_CASE("committor edge cases") {
  const DomainSpec a = below(0, -1.0), b = above(0, 1.0);
  CHECK(estimate_committor(ou(), a, b, 0.5, State{1.5}, 10, IntegratorConfig{}, 1).q == 1.0);
  CHECK(estimate_committor(ou(), a, b, 0.5, State{-1.5}, 10, IntegratorConfig{}, 1).q == 0.0);

  IntegratorConfig short_run;
  short_run.t_max = 1e-3;
  CHECK_THROWS_AS(estimate_committor(ou(), a, b, 0.5, State{0.0}, 10, short_run, 1), NoDataError);

  CHECK_THROWS_AS(estimate_committor(ou(), below(0, 1.0), above(0, -1.0), 0.5, State{0.0}, 10, IntegratorConfig{}, 1),
                  ArgumentError);
}

TEST_CASE("committor and its reverse sum to one") {
  IntegratorConfig cfg;
  cfg.t_max = 2.0;
  const CommittorEstimate c =
      estimate_committor(ou(), below(0, -1.0), above(0, 1.0), 0.5, State{0.3}, 500, cfg, 8);
  CHECK(c.censored > 0);
  CHECK(c.hits_a + c.hits_b + c.censored == c.n);
  CHECK(std::abs(c.q + c.reverse() - 1.0) <= 0x1p-52);
}

TEST_CASE("symmetric double well committor is one half") {
  const CommittorEstimate c =
      estimate_committor(double_well_1d(), below(0, -1.0), above(0, 1.0), 0.5, State{0.0}, 10000, bridged(), 4);
  INFO("q " << c.q << " stderr " << c.std_error);
  CHECK(std::abs(c.q - 0.5) <= 3.0 * c.std_error);
}

TEST_CASE("OU committor matches the quadrature oracle") {
  const double target = oracle::committor([](double s) { return 0.5 * s * s; }, 0.5, -1.0, 1.0, 0.25);
  const CommittorEstimate c =
      estimate_committor(ou(), below(0, -1.0), above(0, 1.0), 0.5, State{0.25}, 10000, bridged(), 12);
  INFO("q " << c.q << " stderr " << c.std_error << " oracle " << target);
  CHECK(std::abs(c.q - target) <= 3.0 * c.std_error);
  CHECK(c.value == doctest::Approx(-0.5 * std::log(c.q)));
}

TEST_CASE("exponential fit") {
  NoiseStream rng(2, 0);
  std::vector<double> draws(100000);
  for (double& t : draws) t = -std::log(rng.uniform()) / 2.0;
  const ExponentialFit fit = fit_exponential(draws);
  CHECK(fit.rate == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fit.cv == doctest::Approx(1.0).epsilon(0.02));
  CHECK(fit.ks < 0.01);

  double mean = 0.0;
  for (double t : draws) mean += t;
  mean /= static_cast<double>(draws.size());
  CHECK(std::abs(fit.rate * mean - 1.0) <= 0x1p-52);

  const std::vector<double> constant(10, 3.0);
  const ExponentialFit c = fit_exponential(constant);
  CHECK(c.rate == doctest::Approx(1.0 / 3.0));
  CHECK(c.cv == 0.0);

  CHECK_THROWS_AS(fit_exponential(std::vector<double>{1.0, 0.0}), ArgumentError);
  CHECK_THROWS_AS(fit_exponential(std::vector<double>{1.0}), ArgumentError);
}

TEST_CASE("double well exit time is nearly exponential and consistent with hitting probabilities") {
  const Diffusion dw = double_well_1d();
  const double eps = 0.2, horizon = 30.0;
  const std::vector<DomainSpec> sets{below(0, 0.0)};
  const auto results = run_trials(dw, State{-1.0}, eps, IntegratorConfig{}, sets, 2000, 61);
  std::vector<double> taus;
  for (const auto& r : results) taus.push_back(r.tau);
  const ExponentialFit fit = fit_exponential(taus);
  CHECK(fit.cv >= 0.8);
  CHECK(fit.cv <= 1.2);

  const MfetEstimate m = summarize_exit_times(results);
  const HitProbEstimate p =
      estimate_hitting_prob(dw, above(0, 0.0), horizon, eps, State{-1.0}, 2000, IntegratorConfig{}, 62);
  const double predicted = 1.0 - std::exp(-horizon / m.mean);
  const double dpred = std::exp(-horizon / m.mean) * horizon / (m.mean * m.mean) * m.std_error;
  const double combined = std::hypot(p.std_error, dpred);
  INFO("p " << p.p << " predicted " << predicted << " combined stderr " << combined);
  CHECK(std::abs(p.p - predicted) <= 3.0 * combined);
}

TEST_CASE("sweep regression on exact synthetic data") {
  std::vector<SweepRow> rows;
  for (double inv : {1.0, 2.0, 3.0, 4.0, 5.0}) {
    SweepRow r;
    r.eps = 1.0 / inv;
    r.estimate.mean = std::exp(3.0 + 0.7 * inv);
    r.estimate.std_error = 0.1 * r.estimate.mean;
    r.estimate.n = 100;
    rows.push_back(r);
  }
  const SweepResult fit = fit_sweep(rows);
  CHECK(fit.slope == doctest::Approx(0.7).epsilon(1e-13));
  CHECK(fit.intercept == doctest::Approx(3.0).epsilon(1e-13));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-13));
  const SweepResult weighted = fit_sweep(rows, true);
  CHECK(weighted.slope == doctest::Approx(0.7).epsilon(1e-13));

  rows[2].estimate.timeout_count = 1;
  const SweepResult partial = fit_sweep(rows);
  CHECK(partial.rows.size() == 5);
  REQUIRE(partial.excluded.size() == 1);
  CHECK(partial.excluded[0] == rows[2].eps);
  CHECK(partial.slope == doctest::Approx(0.7).epsilon(1e-13));

  std::vector<SweepRow> same(2, rows[0]);
  CHECK_THROWS_AS(fit_sweep(same), ArgumentError);

  std::ostringstream sweep_csv, reg_csv;
  write_sweep_csv(sweep_csv, fit);
  write_regression_csv(reg_csv, fit);
  CHECK(sweep_csv.str().rfind("eps,inv_eps,mean_tau,stderr,n,timeouts\n", 0) == 0);
  CHECK(reg_csv.str().rfind("slope,intercept,r_squared\n", 0) == 0);
}

TEST_CASE("OU sweep slope tracks the Lyapunov bound") {
  const LinearModel m = with_gramian(ou_1d(1.0));
  const double bound = sphere_infimum(*m.gramian, 1.0);
  CHECK(bound == doctest::Approx(1.0));
  const std::vector<double> eps{0.5, 1.0 / 3.0, 0.25, 0.2};
  const SweepResult s = sweep_mfet(ou(), norm_ball(1.0), eps, State{0.0}, 500, IntegratorConfig{}, 5);
  INFO("slope " << s.slope);
  CHECK(std::abs(s.slope - bound) <= 0.25 * bound);
  CHECK(s.excluded.empty());
}

TEST_CASE("empirical covariance") {
  Trajectory flat;
  for (int i = 0; i < 10; ++i) {
    flat.times.push_back(i);
    flat.states.push_back(State{1.0, 2.0});
  }
  const Matrix zero = empirical_covariance(flat, 0.0);
  CHECK(zero.max_abs() == 0.0);

  Trajectory tiny = flat;
  tiny.states.resize(2);
  tiny.times.resize(2);
  CHECK_THROWS_AS(empirical_covariance(tiny, 0.0), NoDataError);

  const LinearModel m = make_linear_model(-1.0 * Matrix::identity(2), Matrix::identity(2));
  IntegratorConfig cfg;
  cfg.t_max = 1e4;
  NoiseStream noise(14, 0);
  const Trajectory traj = sample_trajectory(to_diffusion(m), State{0.0, 0.0}, 1.0, cfg, noise, 10);
  const Matrix cov = empirical_covariance(traj, 0.01);
  CHECK(cov(0, 0) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(cov(1, 1) == doctest::Approx(0.5).epsilon(0.1));
  CHECK(std::abs(cov(0, 1)) <= 0.05);
}
