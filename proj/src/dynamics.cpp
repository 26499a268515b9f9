#include "reach/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "reach/csv.hpp"
#include "reach/errors.hpp"

namespace reach {

Diffusion::Diffusion(std::string name, VectorField drift, Matrix noise,
                     std::vector<Topology> topology)
    : name_(std::move(name)), drift_(std::move(drift)), noise_(std::move(noise)),
      topology_(std::move(topology)) {
  if (!drift_) throw ArgumentError("Diffusion: drift is required");
  if (noise_.rows() == 0) throw ArgumentError("Diffusion: noise matrix must have n rows");
  if (topology_.empty()) topology_.assign(noise_.rows(), Topology::linear);
  if (topology_.size() != noise_.rows()) throw ArgumentError("Diffusion: topology has wrong length");
}

Vector Diffusion::drift(std::span<const double> x) const {
  if (x.size() != dimension()) throw ArgumentError("Diffusion::drift: dimension mismatch");
  Vector f(dimension());
  drift_(x, f);
  return f;
}

Diffusion to_diffusion(const SystemSpec& sys) {
  const Matrix& g = sys.noise_factor();
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < g.cols(); ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i) s += std::abs(g(i, j));
    if (s > 0.0) keep.push_back(j);
  }
  Matrix reduced(g.rows(), keep.size());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t k = 0; k < keep.size(); ++k) reduced(i, k) = g(i, keep[k]);

  auto drift = [sys](std::span<const double> x, std::span<double> out) {
    thread_local Vector grad;
    grad.resize(x.size());
    sys.gradient(x, grad);
    multiply_into(sys.drift_matrix(), grad, out);
  };
  return Diffusion(sys.name(), drift, std::move(reduced), sys.topology());
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("IntegratorConfig: dt must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max))
    throw ArgumentError("IntegratorConfig: t_max must be non-negative");
  if (t_max / dt > 1e9) throw BudgetError("IntegratorConfig: t_max/dt exceeds the 1e9 step budget");
}

std::size_t IntegratorConfig::step_count() const {
  const double r = t_max / dt;
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * std::max(1.0, r)) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(r));
}

namespace {

struct StepBuffers {
  Vector f, xi, kick;
  explicit StepBuffers(const Diffusion& m)
      : f(m.dimension()), xi(m.noise_dimension()), kick(m.dimension()) {}
};

void advance(const Diffusion& model, std::span<double> x, double eps, double h,
             std::span<const double> xi, StepBuffers& buf) {
  model.drift(x, buf.f);
  const double scale = std::sqrt(eps * h);
  if (scale > 0.0) {
    multiply_into(model.noise(), xi, buf.kick);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * buf.f[i] + scale * buf.kick[i];
  } else {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += h * buf.f[i];
  }
}

void check_finite(std::span<const double> x, std::size_t step) {
  for (double v : x)
    if (!std::isfinite(v))
      throw DivergedError(step, "state diverged (non-finite) at step " + std::to_string(step));
}

void check_eps(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ArgumentError("noise level eps must be ≥ 0");
}

double time_at(const IntegratorConfig& cfg, std::size_t k, std::size_t n_steps) {
  return k == n_steps ? cfg.t_max : static_cast<double>(k) * cfg.dt;
}

// Probability that a Brownian bridge between two interior points touched the
// boundary, from the half-space picture with the normal taken at x_prev. In
// terms of levels the exponent is 2·c_prev·c / (ε·|Gᵀ∇c|²·h); |∇c| cancels.
double bridge_crossing_probability(const Diffusion& model, const DomainSpec& set,
                                   std::span<const double> x_prev, double c_prev, double c,
                                   double eps, double h) {
  const Vector g = set.level_gradient(x_prev);
  const Matrix& noise = model.noise();
  double sigma2 = 0.0;
  for (std::size_t k = 0; k < noise.cols(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < noise.rows(); ++i) s += noise(i, k) * g[i];
    sigma2 += s * s;
  }
  if (sigma2 <= 0.0) return 0.0;
  const double exponent = 2.0 * c_prev * c / (eps * sigma2 * h);
  return exponent > 745.0 ? 0.0 : std::exp(-exponent);
}

}  // namespace

void euler_maruyama_step(const Diffusion& model, std::span<double> x, double eps, double h,
                         std::span<const double> xi) {
  if (x.size() != model.dimension() || xi.size() != model.noise_dimension())
    throw ArgumentError("euler_maruyama_step: dimension mismatch");
  StepBuffers buf(model);
  advance(model, x, eps, h, xi, buf);
}

State step_langevin(const Diffusion& model, std::span<const double> x, double eps, double dt,
                    NoiseStream& noise, std::size_t step_index) {
  check_eps(eps);
  if (!(dt > 0.0)) throw ArgumentError("step_langevin: dt must be positive");
  if (x.size() != model.dimension()) throw ArgumentError("step_langevin: dimension mismatch");
  StepBuffers buf(model);
  State y(x.begin(), x.end());
  noise.fill_gaussian(buf.xi);
  advance(model, y, eps, dt, buf.xi, buf);
  check_finite(y, step_index);
  normalize_in_place(model.topology(), y);
  return y;
}

State step_langevin(const SystemSpec& sys, std::span<const double> x, double eps, double dt,
                    NoiseStream& noise, std::size_t step_index) {
  return step_langevin(to_diffusion(sys), x, eps, dt, noise, step_index);
}

HittingResult simulate_until(const Diffusion& model, std::span<const double> x0, double eps,
                             const IntegratorConfig& cfg, std::span<const DomainSpec> exit_sets,
                             NoiseStream& noise) {
  check_eps(eps);
  cfg.validate();
  if (x0.size() != model.dimension()) throw ArgumentError("simulate_until: dimension mismatch");

  State x(x0.begin(), x0.end());
  normalize_in_place(model.topology(), x);

  const std::size_t n_sets = exit_sets.size();
  Vector c_prev(n_sets), c(n_sets);
  for (std::size_t i = 0; i < n_sets; ++i) {
    c_prev[i] = exit_sets[i].level(x);
    if (c_prev[i] >= 0.0) return {0.0, x, static_cast<int>(i)};
  }

  const std::size_t n_steps = cfg.step_count();
  StepBuffers buf(model);
  State x_prev = x;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double t0 = time_at(cfg, k - 1, n_steps);
    const double t1 = time_at(cfg, k, n_steps);
    const double h = t1 - t0;

    x_prev = x;
    noise.fill_gaussian(buf.xi);
    advance(model, x, eps, h, buf.xi, buf);
    check_finite(x, k);
    normalize_in_place(model.topology(), x);

    int hit = HittingResult::timeout;
    double hit_time = t1;
    for (std::size_t i = 0; i < n_sets; ++i) {
      c[i] = exit_sets[i].level(x);
      if (c[i] < 0.0) continue;
      double t_cross = t1;
      if (cfg.interpolate_crossing) {
        const double frac = -c_prev[i] / (c[i] - c_prev[i]);
        t_cross = t0 + h * std::clamp(frac, 0.0, 1.0);
      }
      if (hit == HittingResult::timeout || t_cross < hit_time) {
        hit = static_cast<int>(i);
        hit_time = t_cross;
      }
    }
    if (hit != HittingResult::timeout) return {hit_time, x, hit};

    if (cfg.bridge_correction && eps > 0.0) {
      for (std::size_t i = 0; i < n_sets; ++i) {
        const double p =
            bridge_crossing_probability(model, exit_sets[i], x_prev, c_prev[i], c[i], eps, h);
        if (p > 0.0 && noise.uniform() < p) return {t1, x, static_cast<int>(i)};
      }
    }
    c_prev = c;
  }
  return {cfg.t_max, x, HittingResult::timeout};
}

Trajectory sample_trajectory(const Diffusion& model, std::span<const double> x0, double eps,
                             const IntegratorConfig& cfg, NoiseStream& noise, std::size_t stride) {
  check_eps(eps);
  cfg.validate();
  if (stride == 0) throw ArgumentError("sample_trajectory: stride must be ≥ 1");
  if (x0.size() != model.dimension()) throw ArgumentError("sample_trajectory: dimension mismatch");

  const std::size_t n_steps = cfg.step_count();
  Trajectory traj;
  traj.stride = stride;
  traj.times.reserve(n_steps / stride + 1);
  traj.states.reserve(n_steps / stride + 1);

  State x(x0.begin(), x0.end());
  normalize_in_place(model.topology(), x);
  traj.times.push_back(0.0);
  traj.states.push_back(x);

  StepBuffers buf(model);
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double h = time_at(cfg, k, n_steps) - time_at(cfg, k - 1, n_steps);
    noise.fill_gaussian(buf.xi);
    advance(model, x, eps, h, buf.xi, buf);
    check_finite(x, k);
    normalize_in_place(model.topology(), x);
    if (k % stride == 0) {
      traj.times.push_back(time_at(cfg, k, n_steps));
      traj.states.push_back(x);
    }
  }
  return traj;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const std::size_t n = traj.states.empty() ? 0 : traj.states.front().size();
  out << 't';
  for (std::size_t i = 1; i <= n; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    out << format_double(traj.times[k]) << ',' << csv_row(traj.states[k]) << '\n';
}

}  // namespace reach
