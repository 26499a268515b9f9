#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "reach/boundary.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/linear.hpp"
#include "reach/models.hpp"

using namespace reach;

namespace {

ScalarField controllability(const SystemSpec& sys) {
  return [&sys](std::span<const double> x) { return controllability_value(sys, x); };
}

}  // namespace

TEST_CASE("closed-form sphere quadratic") {
  CHECK(closed_form_sphere_quadratic(pendulum_stiffness_matrix(), 0.5) ==
        doctest::Approx(0.5 * (21.0 - std::sqrt(200.0)) * 0.25).epsilon(1e-14));
  CHECK(closed_form_sphere_quadratic(Matrix::identity(3), 1.0) == doctest::Approx(0.5));
  CHECK(closed_form_sphere_quadratic(Matrix::diagonal(Vector{4.0, 9.0}), 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(closed_form_sphere_quadratic(Matrix::diagonal(Vector{1.0, -1.0}), 1.0), ArgumentError);
}

TEST_CASE("linearized pendulum infimum on |q| = 0.5") {
  const auto lp = linearized_double_pendulum();
  const auto domains = linearized_pendulum_domains();
  const BoundaryResult r =
      boundary_infimum(controllability(lp.system), domains.d2, state_box(lp.system.topology()), OptimizerConfig{});
  CHECK(r.value == doctest::Approx(0.857233047).epsilon(1e-8));
  CHECK(std::abs(r.value - closed_form_sphere_quadratic(pendulum_stiffness_matrix(), 0.5)) <= 1e-8);
  CHECK(r.accepted());
}

TEST_CASE("nonlinear pendulum infima") {
  const SystemSpec sys = double_pendulum();
  const auto domains = double_pendulum_domains();
  const SamplingBox box = state_box(sys.topology());
  const BoundaryResult d2 = boundary_infimum(controllability(sys), domains.d2, box, OptimizerConfig{});
  CHECK(std::abs(d2.value - 0.8539) <= 1e-3);
  CHECK(d2.accepted());
  const BoundaryResult d1 = boundary_infimum(controllability(sys), domains.d1, box, OptimizerConfig{});
  CHECK(std::abs(d1.value - 0.0858) <= 1e-3);
  CHECK(std::abs(d1.value - 0.5 * (3.0 - 2.0 * std::sqrt(2.0))) <= 1e-6);
  CHECK(d1.accepted());

  for (const BoundaryResult* r : {&d1, &d2}) {
    const DomainSpec& d = r == &d1 ? domains.d1 : domains.d2;
    CHECK(std::abs(d.level(r->argmin)) <= 1e-6);
    CHECK(controllability_value(sys, r->argmin) == r->value);
    CHECK(r->n_converged >= r->n_agree);
  }
}

TEST_CASE("eliminating momenta agrees with the full search on |q| = 0.5") {
  const SystemSpec sys = double_pendulum();
  const auto domains = double_pendulum_domains();
  const SamplingBox box = state_box(sys.topology());
  const BoundaryResult full = boundary_infimum(controllability(sys), domains.d2, box, OptimizerConfig{});
  const BoundaryResult reduced =
      boundary_infimum_restricted(controllability(sys), domains.d2, box, OptimizerConfig{}, {0, 1}, State(4, 0.0));
  CHECK(reduced.value == doctest::Approx(full.value).epsilon(1e-8));
  CHECK(reduced.argmin.size() == 4);
  CHECK(reduced.argmin[2] == 0.0);
  CHECK(reduced.argmin[3] == 0.0);
}

TEST_CASE("quadratic forms on spheres match the eigenvalue formula") {
  NoiseStream rng(12, 0);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + trial % 3;
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.gaussian();
    const Matrix sigma = m.transpose() * m + 0.3 * Matrix::identity(n);
    const Matrix inv = inverse(sigma);
    const double r = 0.5 + 0.5 * trial;
    const ScalarField quad = [&inv](std::span<const double> y) { return 0.5 * dot(y, inv * y); };
    const std::vector<Topology> topo(n, Topology::linear);
    const BoundaryResult res = boundary_infimum(quad, norm_ball(r), state_box(topo, 2.0 * r), OptimizerConfig{});
    const double expected = sphere_infimum(sigma, r);
    CHECK(res.value == doctest::Approx(expected).epsilon(1e-6));
    CHECK(closed_form_sphere_quadratic(inv, r) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("shrinking the radius never increases the infimum") {
  const SystemSpec sys = double_pendulum();
  const SamplingBox box = state_box(sys.topology());
  OptimizerConfig cfg;
  cfg.n_starts = 16;
  double last = -1.0;
  for (double r : {0.1, 0.2, 0.4, 0.6, 0.8}) {
    const BoundaryResult res =
        boundary_infimum_restricted(controllability(sys), norm_ball(r, {0, 1}), box, cfg, {0, 1}, State(4, 0.0));
    CHECK(res.value >= last);
    last = res.value;
  }
}

TEST_CASE("results are deterministic and thread-count independent") {
  const SystemSpec sys = double_pendulum();
  const auto domains = double_pendulum_domains();
  const SamplingBox box = state_box(sys.topology());
  OptimizerConfig one, four;
  one.threads = 1;
  four.threads = 4;
  const BoundaryResult a = boundary_infimum(controllability(sys), domains.d1, box, one);
  const BoundaryResult b = boundary_infimum(controllability(sys), domains.d1, box, four);
  CHECK(a.value == b.value);
  CHECK(a.argmin == b.argmin);
  CHECK(a.n_converged == b.n_converged);
}

TEST_CASE("unreachable boundary raises no-convergence") {
  DomainSpec never;
  never.level = [](std::span<const double> x) { return x[0] * x[0] + 1.0; };
  const ScalarField f = [](std::span<const double> x) { return x[0] * x[0]; };
  OptimizerConfig cfg;
  cfg.n_starts = 4;
  CHECK_THROWS_AS(boundary_infimum(f, never, state_box({Topology::linear}), cfg), NoConvergenceError);

  cfg.n_starts = 0;
  CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("boundary result CSV") {
  BoundaryResult r;
  r.value = 0.5;
  r.argmin = {1.0, 2.0};
  r.n_converged = 7;
  std::ostringstream out;
  write_boundary_csv(out, r);
  CHECK(out.str() == "value,argmin_1,argmin_2,n_converged\n0.5,1,2,7\n");
}
