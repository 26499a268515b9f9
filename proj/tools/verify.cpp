#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>

#include "cli.hpp"
#include "oracles.hpp"
#include "reach/boundary.hpp"
#include "reach/coarse.hpp"
#include "reach/csv.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/hitting.hpp"
#include "reach/linear.hpp"
#include "reach/models.hpp"
#include "reach/noise.hpp"

namespace cli {

using namespace reach;

namespace {

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Largest relative HJB residual |r| / (1 + |∇H|²) over random box states.
double worst_hjb(const SystemSpec& sys, std::size_t samples, std::uint64_t seed) {
  NoiseStream rng(seed, 0);
  const SamplingBox box = state_box(sys.topology());
  double worst = 0.0;
  State x(sys.dimension());
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < x.size(); ++i)
      x[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * rng.uniform();
    const Vector g = sys.gradient(x);
    double g2 = 0.0;
    for (double v : g) g2 += v * v;
    worst = std::max(worst, std::abs(hjb_residual(sys, x)) / (1.0 + g2));
  }
  return worst;
}

double ou_drift(double x) { return -x; }

}  // namespace

Outcome cmd_verify(const Options& o) {
  std::vector<Check> checks;
  auto record = [&](std::string name, double value, double tolerance) {
    checks.push_back({std::move(name), value, tolerance, std::isfinite(value) && value <= tolerance});
  };
  const unsigned threads = o.threads;

  const SystemSpec pendulum = double_pendulum();
  const LinearizedPendulum linear = linearized_double_pendulum();
  const Matrix s = pendulum_kinetic_matrix();
  const Matrix n = pendulum_stiffness_matrix();

  record("gradient double-pendulum", gradient_check_error(pendulum, 200, o.seed), 1e-6);
  record("gradient double-pendulum-linear", gradient_check_error(linear.system, 200, o.seed), 1e-6);
  record("hjb double-pendulum", worst_hjb(pendulum, 2000, o.seed), 1e-10);
  record("hjb double-pendulum-linear", worst_hjb(linear.system, 2000, o.seed), 1e-10);

  const Matrix q = linear.linear.c * linear.linear.c.transpose();
  const Matrix sigma = solve_lyapunov(linear.linear.a, q);
  Matrix blocks(4, 4);
  const Matrix n_inv = inverse(n), s_inv = inverse(s);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      blocks(i, j) = n_inv(i, j);
      blocks(i + 2, j + 2) = s_inv(i, j);
    }
  record("lyapunov block form", max_abs_diff(sigma, blocks), 1e-10);
  record("lyapunov residual", lyapunov_residual(linear.linear.a, sigma, q), 1e-10);

  const Linearization lin = linearize(pendulum, pendulum.equilibrium());
  record("linearization matches the linear model", max_abs_diff(lin.model.a, linear.linear.a), 1e-5);
  record("kalman rank deficit", 4.0 - static_cast<double>(controllability_rank(linear.linear.a, linear.linear.c)), 0.0);
  record("hurwitz", hurwitz_check(linear.linear.a) ? 0.0 : 1.0, 0.0);

  const double sphere = sphere_infimum(sigma, 1.0);
  record("sphere infimum vs closed form", std::abs(sphere - closed_form_sphere_quadratic(inverse(sigma), 1.0)), 1e-10);

  OptimizerConfig opt;
  opt.n_starts = 16;
  opt.seed = o.seed;
  opt.threads = threads;
  const ScalarField l_linear = [&](std::span<const double> x) { return controllability_value(linear.system, x); };
  const PendulumDomains dom = linearized_pendulum_domains();
  const SamplingBox box = state_box(linear.system.topology());
  const double d2_exact = 0.5 * (21.0 - std::sqrt(200.0)) * 0.25;
  const double d1_exact = 0.5 * (3.0 - 2.0 * std::sqrt(2.0));
  record("linear D2 infimum", std::abs(boundary_infimum(l_linear, dom.d2, box, opt).value - d2_exact), 1e-6);
  record("linear D1 infimum", std::abs(boundary_infimum(l_linear, dom.d1, box, opt).value - d1_exact), 1e-6);

  IntegratorConfig cfg;
  cfg.bridge_correction = true;
  cfg.t_max = 1e3;
  const ModelCatalogEntry ou = load_model("ou:a=1");
  {
    const double eps = 0.5;
    const double exact = oracle::dynkin_mean_exit(ou_drift, eps, -1.0, 1.0, false, 0.0, 20001);
    const MfetEstimate m = estimate_mfet(ou.diffusion, norm_ball(1.0), eps, State{0.0}, 2000, cfg, o.seed, threads);
    record("ou mean exit time (z-score)", std::abs(m.mean - exact) / m.std_error, 4.0);
  }
  {
    const double eps = 0.5, x0 = 0.25;
    const double exact = oracle::committor([](double x) { return 0.5 * x * x; }, eps, -1.0, 1.0, x0);
    const CommittorEstimate c =
        estimate_committor(ou.diffusion, below(0, -1.0), above(0, 1.0), eps, State{x0}, 2000, cfg, o.seed, threads);
    record("ou committor (z-score)", std::abs(c.q - exact) / c.std_error, 4.0);
  }

  {
    const double eps = 0.2;
    const ResolvedSplit exact = make_split(4, {0, 1}, Quadrature{QuadratureKind::closed_form_gaussian_momenta});
    const ResolvedSplit grid = make_split(4, {0, 1}, Quadrature{QuadratureKind::tensor_grid, 8.0, 64, threads});
    const double zero[2] = {0.0, 0.0};
    double worst_exact = 0.0, worst_grid = 0.0;
    for (double a : {-0.5, 0.0, 0.4})
      for (double b : {-0.5, 0.3}) {
        const double z[2] = {a, b};
        const double reference = pendulum_potential(z) - pendulum_potential(zero) +
                                 0.5 * eps *
                                     (log_det_spd(pendulum_inverse_mass(b)) - log_det_spd(pendulum_inverse_mass(0.0)));
        worst_exact = std::max(worst_exact, std::abs(free_energy(pendulum, exact, z, eps) - reference));
        worst_grid = std::max(worst_grid, std::abs(free_energy(pendulum, grid, z, eps) - reference));
      }
    record("free energy closed form", worst_exact, 1e-10);
    record("free energy tensor grid", worst_grid, 1e-6);
  }
  {
    const ResolvedSplit split = make_split(4, {0, 2});
    double worst = 0.0;
    for (double a : {-0.5, 0.2})
      for (double p : {-0.4, 0.6}) {
        const double z[2] = {a, p};
        worst = std::max(worst, std::abs(projected_hjb_residual(linear.system, split, z, 0.5)));
      }
    record("projected hjb linear", worst, 1e-6);
  }

  std::ofstream f(o.out);
  if (!f) throw ArgumentError("cannot write '" + o.out + "'");
  f << "check,status,value,tolerance\n";
  bool all = true;
  for (const Check& c : checks) {
    all = all && c.pass;
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << format_double(c.value) << " (tolerance "
              << format_double(c.tolerance) << ")\n";
    f << c.name << ',' << (c.pass ? "PASS" : "FAIL") << ',' << format_double(c.value) << ','
      << format_double(c.tolerance) << '\n';
  }
  Outcome out;
  out.parameters = nlohmann::json{{"seed", o.seed}, {"checks", checks.size()}, {"passed", all}};
  out.outputs = {o.out};
  out.status = all ? 0 : 1;
  return out;
}

}  // namespace cli
