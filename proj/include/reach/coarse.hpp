#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "reach/system.hpp"

namespace reach {

enum class QuadratureKind { closed_form_gaussian_momenta, tensor_grid };

struct Quadrature {
  QuadratureKind kind = QuadratureKind::tensor_grid;
  double half_width_sigmas = 8.0;  // box half-width per principal axis, in local standard deviations
  std::size_t nodes = 64;          // per unresolved axis, ≥ 16
  unsigned threads = 0;
};

/// Partition of the state coordinates (0-based) into resolved z and
/// unresolved coordinates that are integrated out.
struct ResolvedSplit {
  std::vector<std::size_t> resolved;
  std::vector<std::size_t> unresolved;
  Quadrature quadrature;

  /// Throws ArgumentError unless the two sets partition {0..n-1}.
  void validate(std::size_t n) const;
  /// ξ(x), the resolved coordinates of a full state.
  Vector project(std::span<const double> x) const;
};

/// Resolved = given indices, unresolved = the complement.
ResolvedSplit make_split(std::size_t n, std::vector<std::size_t> resolved, Quadrature q = {});

/// L̄(z) = -ε log ∫ exp(-H(z, u)/ε) du, shifted so that L̄(ξ(equilibrium)) = 0.
///
/// The closed-form path needs a separable kinetic structure with every
/// unresolved index a momentum. The tensor grid centers on the minimizer of H
/// over the unresolved coordinates, aligns with the principal axes of the
/// local Hessian and sums in log space. ArgumentError when the local Hessian
/// is not positive definite or the integrand has not decayed at the box edge.
double free_energy(const SystemSpec& sys, const ResolvedSplit& split, std::span<const double> z,
                   double eps);

struct FreeEnergyLimit {
  double value = 0.0;
  std::array<double, 3> eps{0.2, 0.1, 0.05};
  std::array<double, 3> values{};
  bool monotone = true;
  std::string warning;  // set when the sequence is non-monotone beyond roundoff
};

/// Quadratic extrapolation to ε = 0 from ε ∈ {0.2, 0.1, 0.05}.
FreeEnergyLimit free_energy_limit(const SystemSpec& sys, const ResolvedSplit& split,
                                  std::span<const double> z);

/// ∇L̄ᵀ(J̄ - D̄)∇L̄ + |∇L̄|²_D̄ at z with J̄, D̄ the resolved sub-blocks and ∇L̄ by
/// central differences of free_energy. The resolved set must consist of whole
/// (q_i, p_i) pairs; a position-only split is rejected.
double projected_hjb_residual(const SystemSpec& sys, const ResolvedSplit& split,
                              std::span<const double> z, double eps, double fd_step = 1e-4);

/// `z1,...,zk,Lbar`
void write_free_energy_csv(std::ostream& out, const std::vector<Vector>& points,
                           std::span<const double> values);

}  // namespace reach
