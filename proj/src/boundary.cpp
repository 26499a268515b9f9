#include "reach/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "reach/csv.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/noise.hpp"
#include "reach/parallel.hpp"

namespace reach {

namespace {

struct LocalRun {
  State y;
  double value = 0.0;
  bool converged = false;
};

class PenaltyProblem {
 public:
  PenaltyProblem(const ScalarField& objective, const DomainSpec& boundary, double fd_step)
      : objective_(objective), boundary_(boundary), fd_step_(fd_step) {}

  double value(std::span<const double> y, double w) const {
    const double c = boundary_.level(y);
    return objective_(y) + w * c * c;
  }

  Vector gradient(std::span<const double> y, double w) const {
    const std::size_t n = y.size();
    Vector g(n);
    Vector yp(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i) {
      const double h = fd_step_ * std::max(1.0, std::abs(y[i]));
      yp[i] = y[i] + h;
      const double fp = objective_(yp);
      yp[i] = y[i] - h;
      const double fm = objective_(yp);
      yp[i] = y[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    const double c = boundary_.level(y);
    const Vector gc = boundary_.level_gradient(y);
    for (std::size_t i = 0; i < n; ++i) g[i] += 2.0 * w * c * gc[i];
    return g;
  }

  // Newton steps along ∇c onto the zero level set.
  void project(State& y) const {
    for (int it = 0; it < 20; ++it) {
      const double c = boundary_.level(y);
      if (std::abs(c) <= 1e-14) return;
      const Vector gc = boundary_.level_gradient(y);
      const double g2 = dot(gc, gc);
      if (g2 == 0.0) return;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] -= c * gc[i] / g2;
    }
  }

  double objective(std::span<const double> y) const { return objective_(y); }
  double level(std::span<const double> y) const { return boundary_.level(y); }

 private:
  const ScalarField& objective_;
  const DomainSpec& boundary_;
  double fd_step_;
};

// BFGS on the penalized objective; returns true when the step norm fell below tol.
bool bfgs(const PenaltyProblem& prob, State& y, double w, const OptimizerConfig& cfg) {
  const std::size_t n = y.size();
  Matrix hinv = Matrix::identity(n);
  double f = prob.value(y, w);
  Vector g = prob.gradient(y, w);
  Vector d(n), s(n), trial(n);

  for (std::size_t it = 0; it < cfg.max_iter; ++it) {
    multiply_into(hinv, g, d);
    for (double& v : d) v = -v;
    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      hinv = Matrix::identity(n);
      for (std::size_t i = 0; i < n; ++i) d[i] = -g[i];
      slope = -dot(g, g);
      if (slope == 0.0) return true;
    }

    double alpha = 1.0;
    double f_trial = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = y[i] + alpha * d[i];
      f_trial = prob.value(trial, w);
      if (std::isfinite(f_trial) && f_trial <= f + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return true;  // no descent left at roundoff level

    for (std::size_t i = 0; i < n; ++i) s[i] = alpha * d[i];
    y = trial;
    const Vector g_new = prob.gradient(y, w);
    if (norm2(s) < cfg.tol) return true;

    Vector yv(n);
    for (std::size_t i = 0; i < n; ++i) yv[i] = g_new[i] - g[i];
    const double sy = dot(s, yv);
    if (sy > 1e-12 * norm2(s) * norm2(yv)) {
      const Vector hy = hinv * yv;
      const double yhy = dot(yv, hy);
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          hinv(i, j) += (1.0 + rho * yhy) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
    }
    f = f_trial;
    g = g_new;
  }
  return false;
}

LocalRun run_start(const PenaltyProblem& prob, State y, const OptimizerConfig& cfg) {
  bool converged = false;
  for (double w : cfg.penalty_weights) converged = bfgs(prob, y, w, cfg);
  prob.project(y);
  LocalRun run;
  run.value = prob.objective(y);
  run.converged = converged && std::isfinite(run.value) && std::abs(prob.level(y)) <= 1e-6;
  run.y = std::move(y);
  return run;
}

}  // namespace

SamplingBox state_box(const std::vector<Topology>& topology, double half_width) {
  SamplingBox box{Vector(topology.size()), Vector(topology.size())};
  for (std::size_t i = 0; i < topology.size(); ++i) {
    const double h = topology[i] == Topology::angular ? std::numbers::pi : half_width;
    box.lower[i] = -h;
    box.upper[i] = h;
  }
  return box;
}

void OptimizerConfig::validate() const {
  if (n_starts < 1) throw ArgumentError("OptimizerConfig: n_starts must be ≥ 1");
  if (!(tol > 0.0)) throw ArgumentError("OptimizerConfig: tol must be positive");
  if (penalty_weights.empty()) throw ArgumentError("OptimizerConfig: empty penalty schedule");
  if (!(fd_step > 0.0)) throw ArgumentError("OptimizerConfig: fd_step must be positive");
}

BoundaryResult boundary_infimum(const ScalarField& objective, const DomainSpec& boundary,
                                const SamplingBox& box, const OptimizerConfig& cfg) {
  cfg.validate();
  const std::size_t n = box.lower.size();
  if (n == 0 || box.upper.size() != n) throw ArgumentError("boundary_infimum: malformed sampling box");

  const PenaltyProblem prob(objective, boundary, cfg.fd_step);
  std::vector<LocalRun> runs(cfg.n_starts);
  parallel_for(cfg.n_starts, cfg.threads, [&](std::size_t k) {
    NoiseStream rng(cfg.seed, k);
    State y(n);
    for (std::size_t i = 0; i < n; ++i)
      y[i] = box.lower[i] + (box.upper[i] - box.lower[i]) * rng.uniform();
    runs[k] = run_start(prob, std::move(y), cfg);
  });

  const LocalRun* best = nullptr;
  std::size_t n_converged = 0;
  for (const auto& r : runs) {
    if (!r.converged) continue;
    ++n_converged;
    if (best == nullptr || r.value < best->value) best = &r;
  }
  if (best == nullptr) {
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& r : runs) closest = std::min(closest, std::abs(prob.level(r.y)));
    throw NoConvergenceError("boundary_infimum: none of " + std::to_string(cfg.n_starts) +
                             " starts converged (smallest |c| = " + std::to_string(closest) + ")");
  }

  BoundaryResult out;
  out.value = best->value;
  out.argmin = best->y;
  out.n_converged = n_converged;
  for (const auto& r : runs)
    if (r.converged && r.value - best->value <= 1e-6) ++out.n_agree;
  return out;
}

BoundaryResult boundary_infimum_restricted(const ScalarField& objective, const DomainSpec& boundary,
                                           const SamplingBox& box, const OptimizerConfig& cfg,
                                           const std::vector<std::size_t>& active, const State& base) {
  if (active.empty()) throw ArgumentError("boundary_infimum_restricted: no active coordinates");
  for (std::size_t i : active)
    if (i >= base.size()) throw ArgumentError("boundary_infimum_restricted: index out of range");

  auto embed = [active, base](std::span<const double> u) {
    State x = base;
    for (std::size_t k = 0; k < active.size(); ++k) x[active[k]] = u[k];
    return x;
  };
  const ScalarField reduced_objective = [&](std::span<const double> u) { return objective(embed(u)); };
  DomainSpec reduced_boundary;
  reduced_boundary.label = boundary.label;
  reduced_boundary.level = [&](std::span<const double> u) { return boundary.level(embed(u)); };
  reduced_boundary.gradient = [&](std::span<const double> u, std::span<double> g) {
    const Vector full = boundary.level_gradient(embed(u));
    for (std::size_t k = 0; k < active.size(); ++k) g[k] = full[active[k]];
  };
  SamplingBox reduced_box{Vector(active.size()), Vector(active.size())};
  for (std::size_t k = 0; k < active.size(); ++k) {
    reduced_box.lower[k] = box.lower[active[k]];
    reduced_box.upper[k] = box.upper[active[k]];
  }

  BoundaryResult r = boundary_infimum(reduced_objective, reduced_boundary, reduced_box, cfg);
  r.argmin = embed(r.argmin);
  return r;
}

double closed_form_sphere_quadratic(const Matrix& q, double r) {
  if (!(r > 0.0)) throw ArgumentError("closed_form_sphere_quadratic: r must be positive");
  const auto eig = eigen_sym(q);
  if (!(eig.values.front() > 0.0))
    throw ArgumentError("closed_form_sphere_quadratic: Q is not positive definite");
  return 0.5 * eig.values.front() * r * r;
}

void write_boundary_csv(std::ostream& out, const BoundaryResult& result) {
  out << "value";
  for (std::size_t i = 1; i <= result.argmin.size(); ++i) out << ",argmin_" << i;
  out << ",n_converged\n";
  out << format_double(result.value) << ',' << csv_row(result.argmin) << ',' << result.n_converged
      << '\n';
}

}  // namespace reach
