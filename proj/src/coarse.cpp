#include "reach/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "reach/csv.hpp"
#include "reach/dense.hpp"
#include "reach/errors.hpp"
#include "reach/parallel.hpp"

namespace reach {

void ResolvedSplit::validate(std::size_t n) const {
  std::vector<int> seen(n, 0);
  for (const auto* set : {&resolved, &unresolved})
    for (std::size_t i : *set) {
      if (i >= n) throw ArgumentError("ResolvedSplit: index " + std::to_string(i + 1) + " out of range");
      ++seen[i];
    }
  for (std::size_t i = 0; i < n; ++i)
    if (seen[i] != 1)
      throw ArgumentError("ResolvedSplit: coordinate " + std::to_string(i + 1) +
                          " must appear in exactly one of resolved/unresolved");
  if (quadrature.kind == QuadratureKind::tensor_grid && !unresolved.empty()) {
    if (quadrature.nodes < 16) throw ArgumentError("ResolvedSplit: tensor grid needs ≥ 16 nodes per axis");
    if (!(quadrature.half_width_sigmas > 0.0)) throw ArgumentError("ResolvedSplit: half-width must be positive");
  }
}

Vector ResolvedSplit::project(std::span<const double> x) const {
  Vector z(resolved.size());
  for (std::size_t k = 0; k < resolved.size(); ++k) z[k] = x[resolved[k]];
  return z;
}

ResolvedSplit make_split(std::size_t n, std::vector<std::size_t> resolved, Quadrature q) {
  ResolvedSplit s;
  std::vector<bool> in(n, false);
  for (std::size_t i : resolved)
    if (i < n) in[i] = true;
  for (std::size_t i = 0; i < n; ++i)
    if (!in[i]) s.unresolved.push_back(i);
  s.resolved = std::move(resolved);
  s.quadrature = q;
  s.validate(n);
  return s;
}

namespace {

State embed(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
            std::span<const double> u) {
  State x = sys.equilibrium();
  for (std::size_t k = 0; k < split.resolved.size(); ++k) x[split.resolved[k]] = z[k];
  for (std::size_t k = 0; k < split.unresolved.size(); ++k) x[split.unresolved[k]] = u[k];
  return x;
}

void check_closed_form(const SystemSpec& sys, const ResolvedSplit& split) {
  if (!sys.kinetic())
    throw ArgumentError("free_energy: closed-form quadrature needs a separable kinetic structure");
  const std::size_t d = sys.dimension() / 2;
  for (std::size_t i : split.unresolved)
    if (i < d)
      throw ArgumentError("free_energy: closed-form quadrature only integrates momenta; coordinate " +
                          std::to_string(i + 1) + " is a position");
}

// -ε log ∫ exp(-H/ε) over momenta p_u, dropping the z-independent (2πε)^{m/2}.
double closed_form_raw(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
                       double eps) {
  const std::size_t d = sys.dimension() / 2;

  const State x = embed(sys, split, z, Vector(split.unresolved.size(), 0.0));
  const std::span<const double> q(x.data(), d);
  const Matrix k = sys.kinetic()->inverse_mass(q);
  const double phi = sys.kinetic()->potential(q);

  std::vector<std::size_t> pu, pr;
  for (std::size_t i : split.unresolved) pu.push_back(i - d);
  for (std::size_t i : split.resolved)
    if (i >= d) pr.push_back(i - d);
  Vector p_r(pr.size());
  for (std::size_t k2 = 0; k2 < pr.size(); ++k2) p_r[k2] = x[d + pr[k2]];

  if (pu.empty()) return sys.hamiltonian(x);
  const Matrix kuu = k.select(pu, pu);
  if (!cholesky(kuu)) throw ArgumentError("free_energy: kinetic block is not positive definite");
  double quad = 0.0;
  if (!pr.empty()) {
    // Schur complement K_rr - K_ru K_uu⁻¹ K_ur.
    const Matrix kru = k.select(pr, pu);
    const Matrix schur = k.select(pr, pr) - kru * inverse(kuu) * kru.transpose();
    quad = 0.5 * dot(p_r, schur * p_r);
  }
  return phi + quad + 0.5 * eps * log_det_spd(kuu);
}

Matrix fd_hessian(const std::function<double(const Vector&)>& g, const Vector& u, double h) {
  const std::size_t m = u.size();
  Matrix hess(m, m);
  Vector w = u;
  const double g0 = g(u);
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = u[i] + h;
    const double fp = g(w);
    w[i] = u[i] - h;
    const double fm = g(w);
    w[i] = u[i];
    hess(i, i) = (fp - 2.0 * g0 + fm) / (h * h);
    for (std::size_t j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1})
        for (int sj : {1, -1}) {
          w[i] = u[i] + si * h;
          w[j] = u[j] + sj * h;
          acc += si * sj * g(w);
        }
      w[i] = u[i];
      w[j] = u[j];
      hess(i, j) = hess(j, i) = acc / (4.0 * h * h);
    }
  }
  return hess;
}

Vector fd_gradient(const std::function<double(const Vector&)>& g, const Vector& u, double h) {
  Vector grad(u.size());
  Vector w = u;
  for (std::size_t i = 0; i < u.size(); ++i) {
    w[i] = u[i] + h;
    const double fp = g(w);
    w[i] = u[i] - h;
    const double fm = g(w);
    w[i] = u[i];
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double tensor_grid_raw(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
                       double eps) {
  const std::size_t m = split.unresolved.size();
  const std::function<double(const Vector&)> g = [&](const Vector& u) {
    return sys.hamiltonian(embed(sys, split, z, u));
  };

  // Damped Newton for the minimizer of H over the unresolved coordinates.
  Vector u(m);
  for (std::size_t k = 0; k < m; ++k) u[k] = sys.equilibrium()[split.unresolved[k]];
  constexpr double h = 1e-4;
  for (int it = 0; it < 100; ++it) {
    const Vector grad = fd_gradient(g, u, h);
    const Matrix hess = fd_hessian(g, u, h);
    Vector step;
    if (cholesky(hess)) {
      step = solve(hess, grad);
    } else {
      step = grad;
    }
    double t = 1.0;
    const double g0 = g(u);
    Vector trial(m);
    for (int ls = 0; ls < 50; ++ls) {
      for (std::size_t k = 0; k < m; ++k) trial[k] = u[k] - t * step[k];
      if (g(trial) <= g0) break;
      t *= 0.5;
    }
    u = trial;
    if (t * norm2(step) <= 1e-12 * (1.0 + norm2(u))) break;
  }
  const Matrix hess = fd_hessian(g, u, h);
  const auto eig = eigen_sym(hess);
  if (!(eig.values.front() > 0.0))
    throw ArgumentError("free_energy: H is not locally convex in the unresolved coordinates at z "
                        "(smallest Hessian eigenvalue " + std::to_string(eig.values.front()) + ")");

  // Node u = center + Σ_k v_k σ_k t_k with t_k on a uniform grid in [-w, w].
  const std::size_t nodes = split.quadrature.nodes;
  const double w = split.quadrature.half_width_sigmas;
  const double dt = 2.0 * w / static_cast<double>(nodes - 1);
  Vector sigma(m);
  for (std::size_t k = 0; k < m; ++k) sigma[k] = std::sqrt(eps / eig.values[k]);
  auto node_state = [&](std::span<const std::size_t> idx) {
    Vector v = u;
    for (std::size_t k = 0; k < m; ++k) {
      const double t = -w + dt * static_cast<double>(idx[k]);
      for (std::size_t r = 0; r < m; ++r) v[r] += eig.vectors(r, k) * sigma[k] * t;
    }
    return v;
  };

  std::size_t total = 1;
  for (std::size_t k = 0; k < m; ++k) total *= nodes;
  std::vector<double> energy(total);
  const std::size_t inner = total / nodes;
  parallel_for(nodes, split.quadrature.threads, [&](std::size_t first) {
    std::vector<std::size_t> idx(m, 0);
    for (std::size_t r = 0; r < inner; ++r) {
      std::size_t rem = r;
      for (std::size_t k = m; k-- > 1;) {
        idx[k] = rem % nodes;
        rem /= nodes;
      }
      idx[0] = first;
      energy[first * inner + r] = g(node_state(idx));
    }
  });

  const double gmin = *std::min_element(energy.begin(), energy.end());
  if (!std::isfinite(gmin)) throw UnderflowError("free_energy: non-finite Hamiltonian on the quadrature grid");

  // Decay check at the ends of every principal axis through the center.
  std::vector<std::size_t> edge(m, nodes / 2);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t end : {std::size_t{0}, nodes - 1}) {
      edge[k] = end;
      Vector v = u;
      for (std::size_t r = 0; r < m; ++r) v[r] += eig.vectors(r, k) * sigma[k] * (end == 0 ? -w : w);
      const double rel = -(g(v) - gmin) / eps;
      if (rel > -20.0)
        throw ArgumentError("free_energy: integrand has not decayed at the quadrature box edge "
                            "(log ratio " + std::to_string(rel) + "); increase the half-width");
    }
    edge[k] = nodes / 2;
  }

  double sum = 0.0;
  for (double e : energy) sum += std::exp(-(e - gmin) / eps);
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw UnderflowError("free_energy: marginal integral underflowed; refine the grid");
  double log_jac = static_cast<double>(m) * std::log(dt);
  for (double s : sigma) log_jac += std::log(s);
  return gmin - eps * (std::log(sum) + log_jac);
}

double raw_free_energy(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
                       double eps) {
  if (split.unresolved.empty()) return sys.hamiltonian(embed(sys, split, z, {}));
  if (split.quadrature.kind == QuadratureKind::closed_form_gaussian_momenta)
    return closed_form_raw(sys, split, z, eps);
  return tensor_grid_raw(sys, split, z, eps);
}

}  // namespace

double free_energy(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
                   double eps) {
  split.validate(sys.dimension());
  if (z.size() != split.resolved.size())
    throw ArgumentError("free_energy: z has " + std::to_string(z.size()) + " entries, expected " +
                        std::to_string(split.resolved.size()));
  if (!(eps > 0.0)) throw ArgumentError("free_energy: ε must be positive");
  if (split.quadrature.kind == QuadratureKind::closed_form_gaussian_momenta) check_closed_form(sys, split);
  const Vector z_ref = split.project(sys.equilibrium());
  if (std::equal(z.begin(), z.end(), z_ref.begin())) return 0.0;
  return raw_free_energy(sys, split, z, eps) - raw_free_energy(sys, split, z_ref, eps);
}

FreeEnergyLimit free_energy_limit(const SystemSpec& sys, const ResolvedSplit& split,
                                  std::span<const double> z) {
  FreeEnergyLimit out;
  for (std::size_t k = 0; k < 3; ++k) out.values[k] = free_energy(sys, split, z, out.eps[k]);
  // Lagrange weights at ε = 0 for nodes 0.2, 0.1, 0.05.
  out.value = out.values[0] / 3.0 - 2.0 * out.values[1] + 8.0 / 3.0 * out.values[2];
  const double d1 = out.values[1] - out.values[0];
  const double d2 = out.values[2] - out.values[1];
  const double tol = 1e-10 * (1.0 + std::abs(out.values[2]));
  if (d1 * d2 < 0.0 && std::min(std::abs(d1), std::abs(d2)) > tol) {
    out.monotone = false;
    out.warning = "free_energy_limit: sequence over ε = 0.2, 0.1, 0.05 is not monotone (" +
                  format_double(out.values[0]) + ", " + format_double(out.values[1]) + ", " +
                  format_double(out.values[2]) + "); the extrapolated value may not be a limit";
  }
  return out;
}

double projected_hjb_residual(const SystemSpec& sys, const ResolvedSplit& split,
                              std::span<const double> z, double eps, double fd_step) {
  const std::size_t n = sys.dimension();
  const std::size_t d = n / 2;
  split.validate(n);
  std::vector<bool> in(n, false);
  for (std::size_t i : split.resolved) in[i] = true;
  bool any_momentum = false;
  for (std::size_t i = 0; i < d; ++i) any_momentum = any_momentum || in[d + i];
  if (!any_momentum)
    throw ArgumentError("projected_hjb_residual: the split resolves positions only; the projected "
                        "dynamics is then q̇ = 0 and has no HJB equation to check (free_energy "
                        "remains available as a quasi-potential)");
  for (std::size_t i = 0; i < d; ++i)
    if (in[i] != in[d + i])
      throw ArgumentError("projected_hjb_residual: resolved set must contain whole (q, p) pairs; "
                          "pair " + std::to_string(i + 1) + " is split");
  if (!(fd_step > 0.0)) throw ArgumentError("projected_hjb_residual: fd_step must be positive");

  const std::size_t k = split.resolved.size();
  Vector grad(k);
  Vector zz(z.begin(), z.end());
  for (std::size_t i = 0; i < k; ++i) {
    zz[i] = z[i] + fd_step;
    const double fp = free_energy(sys, split, zz, eps);
    zz[i] = z[i] - fd_step;
    const double fm = free_energy(sys, split, zz, eps);
    zz[i] = z[i];
    grad[i] = (fp - fm) / (2.0 * fd_step);
  }
  const Matrix jbar = sys.structure().select(split.resolved, split.resolved);
  const Matrix dbar = sys.friction().select(split.resolved, split.resolved);
  const Vector fbar = (jbar - dbar) * grad;
  return dot(fbar, grad) + dot(grad, dbar * grad);
}

void write_free_energy_csv(std::ostream& out, const std::vector<Vector>& points,
                           std::span<const double> values) {
  if (points.size() != values.size()) throw ArgumentError("write_free_energy_csv: size mismatch");
  const std::size_t k = points.empty() ? 0 : points.front().size();
  for (std::size_t i = 1; i <= k; ++i) out << 'z' << i << ',';
  out << "Lbar\n";
  for (std::size_t r = 0; r < points.size(); ++r)
    out << csv_row(points[r]) << ',' << format_double(values[r]) << '\n';
}

}  // namespace reach
