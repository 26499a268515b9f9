#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "reach/dynamics.hpp"
#include "reach/linear.hpp"
#include "reach/system.hpp"

namespace reach {

// Planar double pendulum, unit masses/lengths/torsional stiffness, g = 10.
// State (q₁, q₂, p₁, p₂) on 𝕋² × ℝ².

/// M⁻¹(q) = 1/(2 - cos q₂)·[[1, -1 - cos q₂], [-1 - cos q₂, 2 + 3cos q₂]]
Matrix pendulum_inverse_mass(double q2);
/// Φ(q) = ½(q₁² + q₂²) - 20cos q₁ - 10cos(q₁ + q₂)
double pendulum_potential(std::span<const double> q);

SystemSpec double_pendulum();

struct PendulumDomains {
  DomainSpec d1;  // |(M⁻¹(q)p, q)| < 1
  DomainSpec d2;  // |q| < 0.5
};
PendulumDomains double_pendulum_domains();

/// Momentum block S = M⁻¹(0) = [[1, -2], [-2, 5]].
Matrix pendulum_kinetic_matrix();
/// Hessian of Φ at 0: [[31, 10], [10, 11]]. Same spectrum as the sign-flipped
/// variant with -10 off the diagonal (similar via diag(1, -1)).
Matrix pendulum_stiffness_matrix();

struct LinearizedPendulum {
  SystemSpec system;  // Ĥ = ½pᵀSp + ½qᵀNq
  LinearModel linear; // A = [[0, S], [-N, -S]], C = √(2D), Σ cached
};
LinearizedPendulum linearized_double_pendulum();
/// D₁ and D₂ for the linearized model (M⁻¹(q) frozen at S).
PendulumDomains linearized_pendulum_domains();

/// dX = -aX dt + √ε dW.
LinearModel ou_1d(double a);

/// Φ(x) = (x² - 1)²/4
double double_well_potential(double x);
/// Overdamped dX = -Φ'(X) dt + √ε dW.
Diffusion double_well_1d();

/// Linear model text file: a line `A` followed by a matrix CSV block, then a
/// line `C` followed by another. Lines starting with '#' are ignored.
LinearModel read_linear_model(std::istream& in);
LinearModel read_linear_model_file(const std::string& path);

struct ModelCatalogEntry {
  std::string name;
  std::map<std::string, double> parameters;
  std::optional<SystemSpec> system;
  std::optional<LinearModel> linear;
  Diffusion diffusion;
  State equilibrium;
  std::map<std::string, DomainSpec> domains;
};

/// `double-pendulum | double-pendulum-linear | ou:a=<v> | double-well | file:<path>`
ModelCatalogEntry load_model(const std::string& spec);

/// Named default (`D1`, `D2`, `unit`, `left`, ...) or one of
/// `ball:r=<v>`, `qball:r=<v>`, `below:i=<k>,v=<x>`, `above:i=<k>,v=<x>` (k 1-based).
DomainSpec parse_domain(const ModelCatalogEntry& model, const std::string& spec);

}  // namespace reach
