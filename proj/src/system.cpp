#include "reach/system.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "reach/dense.hpp"
#include "reach/errors.hpp"

namespace reach {

namespace {

void require_dim(std::size_t n, std::span<const double> x, const char* what) {
  if (x.size() != n)
    throw ArgumentError(std::string(what) + ": expected state of dimension " + std::to_string(n) +
                        ", got " + std::to_string(x.size()));
}

// D with eigenvalues in [-tol, 0) lifted to exactly zero. D is returned
// untouched when it is already PSD so structural zeros survive.
Matrix clamp_psd(const Matrix& d) {
  const auto eig = eigen_sym(d);
  const double tol = 1e-12;
  bool clamped = false;
  for (double v : eig.values) {
    if (v < -tol) throw ArgumentError("SystemSpec: friction matrix D is not positive semi-definite");
    if (v < 0.0) clamped = true;
  }
  if (!clamped) return d;
  Matrix out(d.rows(), d.cols());
  for (std::size_t k = 0; k < d.rows(); ++k) {
    const double v = std::max(eig.values[k], 0.0);
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j)
        out(i, j) += v * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return symmetrize(out);
}

}  // namespace

SystemSpec::SystemSpec(SystemDefinition def)
    : name_(std::move(def.name)),
      n_(def.equilibrium.size()),
      h_(std::move(def.hamiltonian)),
      grad_h_(std::move(def.grad_hamiltonian)),
      j_(std::move(def.structure)),
      topology_(std::move(def.topology)),
      equilibrium_(std::move(def.equilibrium)),
      kinetic_(std::move(def.kinetic)) {
  if (!h_ || !grad_h_) throw ArgumentError("SystemSpec: Hamiltonian and gradient are required");
  if (n_ == 0 || n_ % 2 != 0) throw ArgumentError("SystemSpec: dimension must be even and positive");
  if (j_.rows() != n_ || j_.cols() != n_ || def.friction.rows() != n_ || def.friction.cols() != n_)
    throw ArgumentError("SystemSpec: J and D must be n×n");
  if (topology_.empty()) topology_.assign(n_, Topology::linear);
  if (topology_.size() != n_) throw ArgumentError("SystemSpec: topology has wrong length");

  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (j_(i, j) != -j_(j, i)) throw ArgumentError("SystemSpec: J is not antisymmetric");
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if (def.friction(i, j) != def.friction(j, i))
        throw ArgumentError("SystemSpec: D is not symmetric");

  d_ = clamp_psd(def.friction);
  j_minus_d_ = j_ - d_;
  noise_factor_ = psd_sqrt(2.0 * d_);

  const Vector g0 = gradient(equilibrium_);
  if (norm2(g0) > 1e-8) throw ArgumentError("SystemSpec: ∇H does not vanish at the equilibrium");

  const double err = gradient_check_error(*this, 16, 0x5eedULL);
  if (!(err <= 1e-6))
    throw ArgumentError("SystemSpec '" + name_ +
                        "': analytic gradient disagrees with finite differences (rel. error " +
                        std::to_string(err) + ")");
}

double SystemSpec::hamiltonian(std::span<const double> x) const {
  require_dim(n_, x, "hamiltonian");
  return h_(x);
}

void SystemSpec::gradient(std::span<const double> x, std::span<double> out) const {
  require_dim(n_, x, "gradient");
  require_dim(n_, out, "gradient");
  grad_h_(x, out);
}

Vector SystemSpec::gradient(std::span<const double> x) const {
  Vector g(n_);
  gradient(x, g);
  return g;
}

double gradient_check_error(const SystemSpec& sys, int samples, std::uint64_t seed, double step) {
  const std::size_t n = sys.dimension();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  Vector x(n), xp(n), g(n);
  for (int s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = sys.topology()[i] == Topology::angular ? std::numbers::pi * unit(rng)
                                                    : sys.equilibrium()[i] + 3.0 * unit(rng);
    }
    sys.gradient(x, g);
    double dev = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      xp = x;
      xp[i] = x[i] + step;
      const double hp = sys.hamiltonian(xp);
      xp[i] = x[i] - step;
      const double hm = sys.hamiltonian(xp);
      dev = std::max(dev, std::abs((hp - hm) / (2.0 * step) - g[i]));
    }
    worst = std::max(worst, dev / std::max(1.0, max_abs(g)));
  }
  return worst;
}

Vector drift(const SystemSpec& sys, std::span<const double> x) {
  require_dim(sys.dimension(), x, "drift");
  return sys.drift_matrix() * sys.gradient(x);
}

double controllability_value(const SystemSpec& sys, std::span<const double> x) {
  require_dim(sys.dimension(), x, "controllability_value");
  return sys.hamiltonian(x) - sys.hamiltonian(sys.equilibrium());
}

double hjb_residual(std::span<const double> f, const Matrix& noise_covariance,
                    std::span<const double> grad_l) {
  const Vector qg = noise_covariance * grad_l;
  return dot(f, grad_l) + 0.5 * dot(grad_l, qg);
}

double hjb_residual(const SystemSpec& sys, std::span<const double> x) {
  require_dim(sys.dimension(), x, "hjb_residual");
  const Vector g = sys.gradient(x);
  const Vector f = sys.drift_matrix() * g;
  return hjb_residual(f, 2.0 * sys.friction(), g);
}

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a > -pi && a <= pi) return a;
  return a - 2.0 * pi * std::ceil((a - pi) / (2.0 * pi));
}

void normalize_in_place(std::span<const Topology> topology, std::span<double> x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (topology[i] == Topology::angular) x[i] = wrap_angle(x[i]);
}

State normalize(const SystemSpec& sys, std::span<const double> x) {
  require_dim(sys.dimension(), x, "normalize");
  State y(x.begin(), x.end());
  normalize_in_place(sys.topology(), y);
  return y;
}

Vector DomainSpec::level_gradient(std::span<const double> x) const {
  Vector g(x.size());
  if (gradient) {
    gradient(x, g);
    return g;
  }
  constexpr double h = 1e-6;
  Vector xp(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double cp = level(xp);
    xp[i] = x[i] - h;
    const double cm = level(xp);
    xp[i] = x[i];
    g[i] = (cp - cm) / (2.0 * h);
  }
  return g;
}

DomainSpec closure_target(const DomainSpec& d) {
  DomainSpec out;
  out.label = d.label;
  out.level = [lv = d.level](std::span<const double> x) { return -lv(x); };
  if (d.gradient) {
    out.gradient = [gr = d.gradient](std::span<const double> x, std::span<double> g) {
      gr(x, g);
      for (double& v : g) v = -v;
    };
  }
  return out;
}

DomainSpec norm_ball(double radius, std::vector<std::size_t> indices, std::string label) {
  if (!(radius > 0.0)) throw ArgumentError("norm_ball: radius must be positive");
  DomainSpec d;
  d.label = label.empty() ? "ball" : std::move(label);
  d.level = [radius, indices](std::span<const double> x) {
    double s = 0.0;
    if (indices.empty()) {
      for (double v : x) s += v * v;
    } else {
      for (std::size_t i : indices) s += x[i] * x[i];
    }
    return std::sqrt(s) - radius;
  };
  d.gradient = [indices](std::span<const double> x, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    double s = 0.0;
    if (indices.empty()) {
      for (double v : x) s += v * v;
    } else {
      for (std::size_t i : indices) s += x[i] * x[i];
    }
    const double r = std::sqrt(s);
    if (r == 0.0) return;
    if (indices.empty()) {
      for (std::size_t i = 0; i < x.size(); ++i) g[i] = x[i] / r;
    } else {
      for (std::size_t i : indices) g[i] = x[i] / r;
    }
  };
  return d;
}

DomainSpec below(std::size_t index, double value, std::string label) {
  DomainSpec d;
  d.label = label.empty() ? "below" : std::move(label);
  d.level = [index, value](std::span<const double> x) { return x[index] - value; };
  d.gradient = [index](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[index] = 1.0;
  };
  return d;
}

DomainSpec above(std::size_t index, double value, std::string label) {
  DomainSpec d;
  d.label = label.empty() ? "above" : std::move(label);
  d.level = [index, value](std::span<const double> x) { return value - x[index]; };
  d.gradient = [index](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[index] = -1.0;
  };
  return d;
}

}  // namespace reach
