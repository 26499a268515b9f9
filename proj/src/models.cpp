#include "reach/models.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "reach/csv.hpp"
#include "reach/errors.hpp"

namespace reach {

namespace {

Matrix canonical_structure(std::size_t d) {
  Matrix j(2 * d, 2 * d);
  for (std::size_t i = 0; i < d; ++i) {
    j(i, d + i) = 1.0;
    j(d + i, i) = -1.0;
  }
  return j;
}

Matrix momentum_friction(std::size_t d) {
  Matrix f(2 * d, 2 * d);
  for (std::size_t i = d; i < 2 * d; ++i) f(i, i) = 1.0;
  return f;
}

std::vector<Topology> torus_topology() {
  return {Topology::angular, Topology::angular, Topology::linear, Topology::linear};
}

// |(K·p, q)| - 1 for a state (q, p) with kinetic matrix K(q).
template <class KineticFn>
DomainSpec velocity_ball(KineticFn kinetic) {
  DomainSpec d;
  d.label = "D1";
  d.level = [kinetic](std::span<const double> x) {
    const Matrix k = kinetic(x[1]);
    const double v1 = k(0, 0) * x[2] + k(0, 1) * x[3];
    const double v2 = k(1, 0) * x[2] + k(1, 1) * x[3];
    return std::sqrt(v1 * v1 + v2 * v2 + x[0] * x[0] + x[1] * x[1]) - 1.0;
  };
  return d;
}

std::map<std::string, std::string> parse_params(const std::string& s) {
  std::map<std::string, std::string> out;
  if (s.empty()) return out;
  for (const auto& kv : split(s, ',')) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ArgumentError("expected key=value, got '" + kv + "'");
    out[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return out;
}

double require_param(const std::map<std::string, std::string>& p, const std::string& key,
                     const std::string& context) {
  const auto it = p.find(key);
  if (it == p.end()) throw ArgumentError(context + ": missing parameter '" + key + "'");
  return parse_double(it->second);
}

}  // namespace

Matrix pendulum_inverse_mass(double q2) {
  const double c = std::cos(q2);
  const double s = 1.0 / (2.0 - c);
  return Matrix{{s, -(1.0 + c) * s}, {-(1.0 + c) * s, (2.0 + 3.0 * c) * s}};
}

double pendulum_potential(std::span<const double> q) {
  return 0.5 * (q[0] * q[0] + q[1] * q[1]) - 20.0 * std::cos(q[0]) - 10.0 * std::cos(q[0] + q[1]);
}

SystemSpec double_pendulum() {
  SystemDefinition def;
  def.name = "double-pendulum";
  def.hamiltonian = [](std::span<const double> x) {
    const Matrix k = pendulum_inverse_mass(x[1]);
    const double p1 = x[2], p2 = x[3];
    const double kinetic = 0.5 * (k(0, 0) * p1 * p1 + 2.0 * k(0, 1) * p1 * p2 + k(1, 1) * p2 * p2);
    return kinetic + pendulum_potential(x.first(2));
  };
  def.grad_hamiltonian = [](std::span<const double> x, std::span<double> g) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    const double c = std::cos(q2), s = std::sin(q2);
    const double den = 2.0 - c;
    const double num = p1 * p1 - 2.0 * (1.0 + c) * p1 * p2 + (2.0 + 3.0 * c) * p2 * p2;
    // ∂/∂q₂ of ½pᵀM⁻¹(q₂)p
    const double dkinetic = s * ((2.0 * p1 * p2 - 3.0 * p2 * p2) * den - num) / (2.0 * den * den);
    const double s12 = std::sin(q1 + q2);
    g[0] = q1 + 20.0 * std::sin(q1) + 10.0 * s12;
    g[1] = q2 + 10.0 * s12 + dkinetic;
    g[2] = (p1 - (1.0 + c) * p2) / den;
    g[3] = (-(1.0 + c) * p1 + (2.0 + 3.0 * c) * p2) / den;
  };
  def.structure = canonical_structure(2);
  def.friction = momentum_friction(2);
  def.topology = torus_topology();
  def.equilibrium = State(4, 0.0);
  def.kinetic = KineticStructure{
      [](std::span<const double> q) { return pendulum_inverse_mass(q[1]); },
      [](std::span<const double> q) { return pendulum_potential(q); }};
  return SystemSpec(std::move(def));
}

PendulumDomains double_pendulum_domains() {
  return {velocity_ball([](double q2) { return pendulum_inverse_mass(q2); }),
          norm_ball(0.5, {0, 1}, "D2")};
}

Matrix pendulum_kinetic_matrix() { return Matrix{{1.0, -2.0}, {-2.0, 5.0}}; }

Matrix pendulum_stiffness_matrix() { return Matrix{{31.0, 10.0}, {10.0, 11.0}}; }

LinearizedPendulum linearized_double_pendulum() {
  const Matrix s = pendulum_kinetic_matrix();
  const Matrix n = pendulum_stiffness_matrix();

  SystemDefinition def;
  def.name = "double-pendulum-linear";
  def.hamiltonian = [s, n](std::span<const double> x) {
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    return 0.5 * (s(0, 0) * p1 * p1 + 2.0 * s(0, 1) * p1 * p2 + s(1, 1) * p2 * p2) +
           0.5 * (n(0, 0) * q1 * q1 + 2.0 * n(0, 1) * q1 * q2 + n(1, 1) * q2 * q2);
  };
  def.grad_hamiltonian = [s, n](std::span<const double> x, std::span<double> g) {
    g[0] = n(0, 0) * x[0] + n(0, 1) * x[1];
    g[1] = n(1, 0) * x[0] + n(1, 1) * x[1];
    g[2] = s(0, 0) * x[2] + s(0, 1) * x[3];
    g[3] = s(1, 0) * x[2] + s(1, 1) * x[3];
  };
  def.structure = canonical_structure(2);
  def.friction = momentum_friction(2);
  def.topology = torus_topology();
  def.equilibrium = State(4, 0.0);
  def.kinetic = KineticStructure{[s](std::span<const double>) { return s; },
                                 [n](std::span<const double> q) {
                                   return 0.5 * (n(0, 0) * q[0] * q[0] + 2.0 * n(0, 1) * q[0] * q[1] +
                                                 n(1, 1) * q[1] * q[1]);
                                 }};
  SystemSpec sys(std::move(def));

  // A = (J - D)·diag(N, S) = [[0, S], [-N, -S]]
  Matrix a(4, 4);
  a.set_block(0, 2, s);
  a.set_block(2, 0, -1.0 * n);
  a.set_block(2, 2, -1.0 * s);
  LinearModel lin = with_gramian(make_linear_model(std::move(a), sys.noise_factor()));
  return {std::move(sys), std::move(lin)};
}

PendulumDomains linearized_pendulum_domains() {
  const Matrix s = pendulum_kinetic_matrix();
  return {velocity_ball([s](double) { return s; }), norm_ball(0.5, {0, 1}, "D2")};
}

LinearModel ou_1d(double a) {
  if (!(a > 0.0)) throw ArgumentError("ou_1d: a must be positive");
  return make_linear_model(Matrix{{-a}}, Matrix{{1.0}});
}

double double_well_potential(double x) {
  const double u = x * x - 1.0;
  return 0.25 * u * u;
}

Diffusion double_well_1d() {
  auto drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = -x[0] * (x[0] * x[0] - 1.0);
  };
  return Diffusion("double-well", drift, Matrix{{1.0}});
}

LinearModel read_linear_model(std::istream& in) {
  std::optional<Matrix> a, c;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line == "A") {
      a = read_matrix_csv(in);
    } else if (line == "C") {
      c = read_matrix_csv(in);
    } else {
      throw ArgumentError("linear model file: unexpected line '" + line + "'");
    }
  }
  if (!a || !c) throw ArgumentError("linear model file: both A and C blocks are required");
  return make_linear_model(std::move(*a), std::move(*c));
}

LinearModel read_linear_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open model file '" + path + "'");
  return read_linear_model(in);
}

ModelCatalogEntry load_model(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (kind == "double-pendulum") {
    SystemSpec sys = double_pendulum();
    auto doms = double_pendulum_domains();
    ModelCatalogEntry e{kind, {}, sys, std::nullopt, to_diffusion(sys), sys.equilibrium(), {}};
    e.domains.emplace("D1", std::move(doms.d1));
    e.domains.emplace("D2", std::move(doms.d2));
    return e;
  }
  if (kind == "double-pendulum-linear") {
    auto lp = linearized_double_pendulum();
    auto doms = linearized_pendulum_domains();
    ModelCatalogEntry e{kind, {}, lp.system, lp.linear, to_diffusion(lp.system),
                        lp.system.equilibrium(), {}};
    e.domains.emplace("D1", std::move(doms.d1));
    e.domains.emplace("D2", std::move(doms.d2));
    return e;
  }
  if (kind == "ou") {
    const auto params = parse_params(rest);
    for (const auto& [key, value] : params)
      if (key != "a") throw ArgumentError("ou: unknown parameter '" + key + "'");
    const double a = params.count("a") ? require_param(params, "a", "ou") : 1.0;
    LinearModel lin = with_gramian(ou_1d(a));
    ModelCatalogEntry e{"ou", {{"a", a}}, std::nullopt, lin, to_diffusion(lin, "ou"), State{0.0}, {}};
    e.domains.emplace("unit", norm_ball(1.0, {}, "unit"));
    return e;
  }
  if (kind == "double-well") {
    ModelCatalogEntry e{kind, {}, std::nullopt, std::nullopt, double_well_1d(), State{-1.0}, {}};
    e.domains.emplace("left", below(0, 0.0, "left"));
    e.domains.emplace("A", below(0, -1.0, "A"));
    e.domains.emplace("B", above(0, 1.0, "B"));
    return e;
  }
  if (kind == "file") {
    if (rest.empty()) throw ArgumentError("file model: path is empty");
    LinearModel lin = read_linear_model_file(rest);
    try {
      lin = with_gramian(lin);
    } catch (const Error&) {
      // Σ is optional; non-Hurwitz models can still be simulated.
    }
    const std::size_t n = lin.dimension();
    ModelCatalogEntry e{"file", {}, std::nullopt, lin, to_diffusion(lin, "file"), State(n, 0.0), {}};
    e.domains.emplace("unit", norm_ball(1.0, {}, "unit"));
    return e;
  }
  throw ArgumentError("unknown model '" + spec + "'");
}

DomainSpec parse_domain(const ModelCatalogEntry& model, const std::string& spec) {
  if (const auto it = model.domains.find(spec); it != model.domains.end()) return it->second;

  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const auto params = parse_params(colon == std::string::npos ? "" : spec.substr(colon + 1));
  const std::size_t n = model.diffusion.dimension();

  if (kind == "ball") return norm_ball(require_param(params, "r", spec), {}, spec);
  if (kind == "qball") {
    if (n % 2 != 0) throw ArgumentError("qball needs a (q, p) model");
    std::vector<std::size_t> idx(n / 2);
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return norm_ball(require_param(params, "r", spec), idx, spec);
  }
  if (kind == "below" || kind == "above") {
    const double i = require_param(params, "i", spec);
    if (i < 1 || i > static_cast<double>(n) || i != std::floor(i))
      throw ArgumentError(spec + ": coordinate index out of range");
    const double v = require_param(params, "v", spec);
    const auto k = static_cast<std::size_t>(i) - 1;
    return kind == "below" ? below(k, v, spec) : above(k, v, spec);
  }
  throw ArgumentError("unknown domain '" + spec + "' for model '" + model.name + "'");
}

}  // namespace reach
