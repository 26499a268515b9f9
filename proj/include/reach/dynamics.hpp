#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "reach/matrix.hpp"
#include "reach/noise.hpp"
#include "reach/system.hpp"

namespace reach {

/// Additive-noise SDE dX = f(X) dt + √ε·G dW with constant G (n×m).
///
/// This is the common currency of the time stepper: PHS models, linear
/// models and drift-only test models (the 1-D double well) all convert to it.
class Diffusion {
 public:
  Diffusion(std::string name, VectorField drift, Matrix noise, std::vector<Topology> topology = {});

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return noise_.rows(); }
  std::size_t noise_dimension() const noexcept { return noise_.cols(); }
  const Matrix& noise() const noexcept { return noise_; }
  const std::vector<Topology>& topology() const noexcept { return topology_; }

  void drift(std::span<const double> x, std::span<double> out) const { drift_(x, out); }
  Vector drift(std::span<const double> x) const;

 private:
  std::string name_;
  VectorField drift_;
  Matrix noise_;
  std::vector<Topology> topology_;
};

/// Drift (J - D)∇H and noise √(2D) with its all-zero columns dropped, so a
/// friction confined to the momentum block draws only d Gaussians per step.
Diffusion to_diffusion(const SystemSpec& sys);

enum class Scheme { euler_maruyama };

struct IntegratorConfig {
  double dt = 1e-3;
  double t_max = 1e4;
  Scheme scheme = Scheme::euler_maruyama;
  /// Refine τ by linear interpolation of the level function across the last step.
  bool interpolate_crossing = false;
  /// Also stop when the Brownian bridge between two inside grid points crosses
  /// the boundary (half-space approximation, probability exp(-2·d₀·d₁ / (σ_n²·dt))).
  /// Removes the O(√dt) overestimate of exit times from discrete monitoring.
  bool bridge_correction = false;

  /// Throws ArgumentError for dt ≤ 0 or t_max < 0, BudgetError when t_max/dt > 1e9.
  void validate() const;
  /// Number of grid steps covering [0, t_max]; the last one may be shorter than dt.
  std::size_t step_count() const;
};

struct HittingResult {
  static constexpr int timeout = -1;

  double tau = 0.0;
  State exit_state;
  int label = timeout;  // index of the triggered exit set, or `timeout`

  bool timed_out() const noexcept { return label == timeout; }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::size_t stride = 1;
};

/// In-place Euler–Maruyama update x ← x + h·f(x) + √(εh)·G·ξ (no normalization).
void euler_maruyama_step(const Diffusion& model, std::span<double> x, double eps, double h,
                         std::span<const double> xi);

/// One normalized step driven by the next Gaussians of `noise`. ε = 0 is the
/// deterministic flow. A non-finite result raises DivergedError carrying `step_index`.
State step_langevin(const Diffusion& model, std::span<const double> x, double eps, double dt,
                    NoiseStream& noise, std::size_t step_index = 0);
State step_langevin(const SystemSpec& sys, std::span<const double> x, double eps, double dt,
                    NoiseStream& noise, std::size_t step_index = 0);

/// Integrates until some exit set has level ≥ 0 or t_max is reached.
/// A start with level ≥ 0 returns τ = 0 with that set's label.
HittingResult simulate_until(const Diffusion& model, std::span<const double> x0, double eps,
                             const IntegratorConfig& cfg, std::span<const DomainSpec> exit_sets,
                             NoiseStream& noise);

/// Records every stride-th grid state, including t = 0.
Trajectory sample_trajectory(const Diffusion& model, std::span<const double> x0, double eps,
                             const IntegratorConfig& cfg, NoiseStream& noise, std::size_t stride);

/// CSV with header `t,x1,...,xn`.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace reach
