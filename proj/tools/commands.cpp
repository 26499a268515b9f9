#include <cmath>
#include <fstream>
#include <iostream>

#include "cli.hpp"
#include "reach/boundary.hpp"
#include "reach/coarse.hpp"
#include "reach/csv.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/hitting.hpp"
#include "reach/linear.hpp"
#include "reach/models.hpp"

namespace cli {

using namespace reach;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ArgumentError("cannot write '" + path + "'");
  return f;
}

State initial_state(const Options& o, const ModelCatalogEntry& m) {
  if (o.x0.empty()) return m.equilibrium;
  if (o.x0.size() != m.diffusion.dimension())
    throw ArgumentError("--x0 needs " + std::to_string(m.diffusion.dimension()) + " values");
  return o.x0;
}

IntegratorConfig integrator(const Options& o) {
  IntegratorConfig cfg;
  cfg.dt = o.dt;
  cfg.t_max = o.t_max;
  cfg.bridge_correction = o.bridge;
  cfg.interpolate_crossing = o.interpolate;
  cfg.validate();
  return cfg;
}

json base_parameters(const Options& o, const std::vector<double>& eps, const State& x0) {
  return json{{"model", o.model}, {"eps", eps},      {"trials", o.trials}, {"dt", o.dt}, {"t_max", o.t_max},
              {"seed", o.seed},   {"x0", x0},        {"bridge", o.bridge}, {"interpolate", o.interpolate}};
}

const SystemSpec& require_system(const ModelCatalogEntry& m, const std::string& command) {
  if (!m.system) throw ArgumentError(command + ": model '" + m.name + "' has no Hamiltonian structure");
  return *m.system;
}

}  // namespace

Outcome cmd_simulate(const Options& o) {
  const auto model = load_model(o.model);
  const auto eps = resolve_eps(o);
  if (eps.size() != 1) throw ArgumentError("simulate takes a single noise level");
  if (o.stride == 0) throw ArgumentError("--stride must be at least 1");
  const State x0 = initial_state(o, model);
  NoiseStream noise(o.seed, 0);
  const Trajectory traj = sample_trajectory(model.diffusion, x0, eps[0], integrator(o), noise, o.stride);
  auto f = open_out(o.out);
  write_trajectory_csv(f, traj);

  Outcome out;
  out.parameters = base_parameters(o, eps, x0);
  out.parameters.erase("trials");
  out.parameters["stride"] = o.stride;
  out.outputs = {o.out};
  return out;
}

Outcome cmd_mfet(const Options& o) {
  const auto model = load_model(o.model);
  const auto eps = resolve_eps(o);
  const DomainSpec domain = parse_domain(model, o.domain);
  const State x0 = initial_state(o, model);
  const IntegratorConfig cfg = integrator(o);

  SweepResult sweep;
  for (double e : eps) {
    SweepRow row;
    row.eps = e;
    row.estimate = estimate_mfet(model.diffusion, domain, e, x0, o.trials, cfg, o.seed, o.threads);
    sweep.rows.push_back(row);
  }
  Outcome out;
  out.parameters = base_parameters(o, eps, x0);
  out.parameters["domain"] = o.domain;
  out.parameters["weighted"] = o.weighted;
  out.outputs = {o.out};

  bool fitted = false;
  try {
    const SweepResult fit = fit_sweep(sweep.rows, o.weighted);
    sweep = fit;
    fitted = true;
  } catch (const ArgumentError& e) {
    std::cerr << "note: no slope fitted (" << e.what() << ")\n";
  }
  {
    auto f = open_out(o.out);
    write_sweep_csv(f, sweep);
  }
  for (const auto& row : sweep.rows)
    if (row.estimate.lower_bound())
      std::cerr << "warning: eps=" << row.eps << " has " << row.estimate.timeout_count
                << " timeouts; its mean is a lower bound and is excluded from the fit\n";
  if (fitted) {
    const std::string reg = derived_path(o.out, ".regression.csv");
    auto f = open_out(reg);
    write_regression_csv(f, sweep);
    out.outputs.push_back(reg);
    std::cout << "slope " << format_double(sweep.slope) << " intercept " << format_double(sweep.intercept)
              << " r^2 " << format_double(sweep.r_squared) << '\n';
  }
  return out;
}

Outcome cmd_hitprob(const Options& o) {
  const auto model = load_model(o.model);
  const auto eps = resolve_eps(o);
  const DomainSpec target = parse_domain(model, o.target);
  const State x0 = initial_state(o, model);
  const IntegratorConfig cfg = integrator(o);
  auto f = open_out(o.out);
  f << "eps,p,stderr,value,n,hits\n";
  for (double e : eps) {
    const HitProbEstimate h = estimate_hitting_prob(model.diffusion, target, o.horizon, e, x0, o.trials, cfg, o.seed, o.threads);
    f << format_double(e) << ',' << format_double(h.p) << ',' << format_double(h.std_error) << ','
      << format_double(h.value) << ',' << h.n << ',' << h.hits << '\n';
  }
  Outcome out;
  out.parameters = base_parameters(o, eps, x0);
  out.parameters["target"] = o.target;
  out.parameters["horizon"] = o.horizon;
  out.outputs = {o.out};
  return out;
}

Outcome cmd_committor(const Options& o) {
  const auto model = load_model(o.model);
  const auto eps = resolve_eps(o);
  const DomainSpec a = parse_domain(model, o.avoid);
  const DomainSpec b = parse_domain(model, o.target);
  const State x0 = initial_state(o, model);
  const IntegratorConfig cfg = integrator(o);
  auto f = open_out(o.out);
  f << "eps,q,stderr,value,n,hits_b,hits_a,censored\n";
  for (double e : eps) {
    const CommittorEstimate c = estimate_committor(model.diffusion, a, b, e, x0, o.trials, cfg, o.seed, o.threads);
    f << format_double(e) << ',' << format_double(c.q) << ',' << format_double(c.std_error) << ','
      << format_double(c.value) << ',' << c.n << ',' << c.hits_b << ',' << c.hits_a << ',' << c.censored << '\n';
  }
  Outcome out;
  out.parameters = base_parameters(o, eps, x0);
  out.parameters["avoid"] = o.avoid;
  out.parameters["target"] = o.target;
  out.outputs = {o.out};
  return out;
}

Outcome cmd_inf_l(const Options& o) {
  const auto model = load_model(o.model);
  const SystemSpec& sys = require_system(model, "inf-l");
  const DomainSpec domain = parse_domain(model, o.domain);
  OptimizerConfig cfg;
  cfg.n_starts = o.starts;
  cfg.max_iter = o.max_iter;
  cfg.seed = o.seed;
  cfg.threads = o.threads;
  const ScalarField objective = [&sys](std::span<const double> x) { return controllability_value(sys, x); };
  const SamplingBox box = state_box(sys.topology());

  BoundaryResult r;
  if (o.eliminate_momenta) {
    const std::size_t d = sys.dimension() / 2;
    std::vector<std::size_t> active(d);
    for (std::size_t i = 0; i < d; ++i) active[i] = i;
    State base = sys.equilibrium();
    for (std::size_t i = d; i < base.size(); ++i) base[i] = 0.0;
    r = boundary_infimum_restricted(objective, domain, box, cfg, active, base);
  } else {
    r = boundary_infimum(objective, domain, box, cfg);
  }
  auto f = open_out(o.out);
  write_boundary_csv(f, r);
  std::cout << "inf L = " << format_double(r.value) << " (" << r.n_agree << " of " << r.n_converged
            << " converged starts agree" << (r.accepted() ? "" : "; upper bound only") << ")\n";

  Outcome out;
  out.parameters = json{{"model", o.model},       {"domain", o.domain}, {"starts", o.starts},
                        {"max_iter", o.max_iter}, {"seed", o.seed},     {"eliminate_momenta", o.eliminate_momenta}};
  out.outputs = {o.out};
  return out;
}

Outcome cmd_linearize(const Options& o) {
  const auto model = load_model(o.model);
  const SystemSpec& sys = require_system(model, "linearize");
  const State x0 = initial_state(o, model);
  const Linearization lin = linearize(sys, x0);
  for (const auto& w : lin.warnings) std::cerr << "warning: " << w << '\n';
  const std::string c_path = derived_path(o.out, ".C.csv");
  const std::string h_path = derived_path(o.out, ".hessian.csv");
  {
    auto f = open_out(o.out);
    write_matrix_csv(f, lin.model.a);
  }
  {
    auto f = open_out(c_path);
    write_matrix_csv(f, lin.model.c);
  }
  {
    auto f = open_out(h_path);
    write_matrix_csv(f, lin.hessian);
  }
  Outcome out;
  out.parameters = json{{"model", o.model}, {"x0", x0}, {"hessian_asymmetry", lin.hessian_asymmetry}};
  out.outputs = {o.out, c_path, h_path};
  return out;
}

Outcome cmd_lyapunov(const Options& o) {
  const auto model = load_model(o.model);
  LinearModel lin = model.linear ? *model.linear : linearize(require_system(model, "lyapunov"), model.equilibrium).model;
  if (!hurwitz_check(lin.a)) throw IllPosedError("lyapunov: drift matrix is not Hurwitz");
  const Matrix q = lin.c * lin.c.transpose();
  const Matrix sigma = lin.gramian ? *lin.gramian : solve_lyapunov(lin.a, q);
  const double residual = lyapunov_residual(lin.a, sigma, q);
  auto f = open_out(o.out);
  write_matrix_csv(f, sigma);
  std::cout << "residual " << format_double(residual) << ", r^2/(2 lambda_max) at r = 1: "
            << format_double(sphere_infimum(sigma, 1.0)) << '\n';
  Outcome out;
  out.parameters = json{{"model", o.model}, {"residual", residual}};
  out.outputs = {o.out};
  return out;
}

Outcome cmd_free_energy(const Options& o) {
  const auto model = load_model(o.model);
  const SystemSpec& sys = require_system(model, "free-energy");
  std::vector<std::size_t> resolved;
  for (std::size_t i : o.resolve) {
    if (i < 1 || i > sys.dimension()) throw ArgumentError("--resolve indices are 1-based and within the state");
    resolved.push_back(i - 1);
  }
  Quadrature quad;
  quad.kind = o.closed_form ? QuadratureKind::closed_form_gaussian_momenta : QuadratureKind::tensor_grid;
  quad.nodes = o.nodes;
  quad.half_width_sigmas = o.half_width;
  quad.threads = o.threads;
  const ResolvedSplit split = make_split(sys.dimension(), resolved, quad);
  const std::size_t k = resolved.size();

  std::vector<Vector> points;
  for (const auto& text : o.points) {
    Vector z;
    for (const auto& part : reach::split(text, ',')) z.push_back(parse_double(part));
    if (z.size() != k) throw ArgumentError("--at points need " + std::to_string(k) + " values");
    points.push_back(z);
  }
  if (!o.grid.empty()) {
    if (o.grid.size() != 3 || !(o.grid[2] >= 1.0) || o.grid[2] != std::floor(o.grid[2]))
      throw ArgumentError("--grid takes lo,hi,count");
    const auto count = static_cast<std::size_t>(o.grid[2]);
    const double step = count > 1 ? (o.grid[1] - o.grid[0]) / static_cast<double>(count - 1) : 0.0;
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= count;
    for (std::size_t flat = 0; flat < total; ++flat) {
      Vector z(k);
      std::size_t rem = flat;
      for (std::size_t i = k; i-- > 0;) {
        z[i] = o.grid[0] + step * static_cast<double>(rem % count);
        rem /= count;
      }
      points.push_back(z);
    }
  }
  if (points.empty()) throw ArgumentError("free-energy needs --grid or --at");

  std::vector<double> eps;
  if (!o.limit) {
    eps = resolve_eps(o);
    if (eps.size() != 1) throw ArgumentError("free-energy takes a single noise level");
  }
  std::vector<double> values;
  for (const Vector& z : points) {
    if (o.limit) {
      const FreeEnergyLimit lim = free_energy_limit(sys, split, z);
      if (!lim.warning.empty()) std::cerr << "warning: " << lim.warning << '\n';
      values.push_back(lim.value);
    } else {
      values.push_back(free_energy(sys, split, z, eps[0]));
    }
  }
  auto f = open_out(o.out);
  write_free_energy_csv(f, points, values);

  Outcome out;
  out.parameters = json{{"model", o.model},
                        {"resolve", o.resolve},
                        {"eps", eps},
                        {"limit", o.limit},
                        {"quadrature", o.closed_form ? "closed-form-gaussian-momenta" : "tensor-grid"},
                        {"nodes", o.nodes},
                        {"half_width", o.half_width},
                        {"points", points.size()}};
  out.outputs = {o.out};
  return out;
}

}  // namespace cli
