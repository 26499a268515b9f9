#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "reach/matrix.hpp"
#include "reach/system.hpp"

namespace reach {

/// Axis-aligned box from which multistart points are drawn uniformly.
struct SamplingBox {
  Vector lower;
  Vector upper;
};

/// Angles in (-π, π], linear coordinates in [-half_width, half_width].
SamplingBox state_box(const std::vector<Topology>& topology, double half_width = 3.0);

struct OptimizerConfig {
  std::size_t n_starts = 64;
  std::size_t max_iter = 500;   // per start and penalty weight
  double tol = 1e-10;           // step-norm stopping threshold
  std::uint64_t seed = 1;
  std::vector<double> penalty_weights{1e2, 1e4, 1e6, 1e8};
  double fd_step = 1e-6;
  unsigned threads = 0;

  void validate() const;
};

struct BoundaryResult {
  double value = 0.0;           // objective(argmin), exactly
  State argmin;
  std::size_t n_converged = 0;  // starts whose local run met the step tolerance with |c| ≤ 1e-6
  std::size_t n_agree = 0;      // converged starts within 1e-6 of the best value
  /// At least three starts agree, so the value is taken as the infimum rather
  /// than only an upper bound.
  bool accepted() const noexcept { return n_agree >= 3; }
};

/// Minimizes `objective` on {c = 0} for the boundary's level c by quadratic
/// penalties objective + w·c² with w rising along cfg.penalty_weights. Each
/// local run is BFGS with central-difference gradients and Armijo backtracking,
/// warm-started from the previous weight, then projected onto c = 0 by Newton
/// steps along ∇c. NoConvergenceError if no start converges.
BoundaryResult boundary_infimum(const ScalarField& objective, const DomainSpec& boundary,
                                const SamplingBox& box, const OptimizerConfig& cfg);

/// Same, optimizing only the `active` coordinates with the rest pinned to
/// `base`. For H-based objectives on position-only boundaries, pinning p = 0
/// eliminates the momenta exactly (the kinetic term is minimized there).
BoundaryResult boundary_infimum_restricted(const ScalarField& objective, const DomainSpec& boundary,
                                           const SamplingBox& box, const OptimizerConfig& cfg,
                                           const std::vector<std::size_t>& active, const State& base);

/// ½·λ_min(Q)·r², the infimum of ½yᵀQy on |y| = r.
double closed_form_sphere_quadratic(const Matrix& q, double r);

/// `value,argmin_1..argmin_n,n_converged`
void write_boundary_csv(std::ostream& out, const BoundaryResult& result);

}  // namespace reach
