#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reach/matrix.hpp"

namespace reach {

using State = Vector;
using ScalarField = std::function<double(std::span<const double>)>;
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

enum class Topology { linear, angular };

/// Separable Hamiltonian H(q,p) = ½pᵀK(q)p + Φ(q) with K = M⁻¹ the inverse mass
/// matrix; q occupies the first d coordinates and p the last d.
struct KineticStructure {
  std::function<Matrix(std::span<const double> q)> inverse_mass;
  std::function<double(std::span<const double> q)> potential;
};

/// Everything needed to build a SystemSpec; validated by the SystemSpec constructor.
struct SystemDefinition {
  std::string name;
  ScalarField hamiltonian;
  VectorField grad_hamiltonian;
  Matrix structure;  // J
  Matrix friction;   // D
  std::vector<Topology> topology;
  State equilibrium;
  std::optional<KineticStructure> kinetic;
};

/// Stochastic port-Hamiltonian model dU = (J - D)∇H dt + √(2εD) dW.
///
/// Construction enforces: J antisymmetric entrywise, D symmetric with
/// eigenvalues ≥ -1e-12 (clamped to zero), ∇H(equilibrium) ≤ 1e-8, and the
/// analytic gradient within 1e-6 relative of central differences (step 1e-5)
/// at 16 sampled states. Immutable afterwards.
class SystemSpec {
 public:
  explicit SystemSpec(SystemDefinition def);

  const std::string& name() const noexcept { return name_; }
  std::size_t dimension() const noexcept { return n_; }
  const Matrix& structure() const noexcept { return j_; }
  const Matrix& friction() const noexcept { return d_; }
  /// J - D
  const Matrix& drift_matrix() const noexcept { return j_minus_d_; }
  /// √(2D); the Langevin noise is √ε times this applied to a standard Gaussian.
  const Matrix& noise_factor() const noexcept { return noise_factor_; }
  const std::vector<Topology>& topology() const noexcept { return topology_; }
  const State& equilibrium() const noexcept { return equilibrium_; }
  const std::optional<KineticStructure>& kinetic() const noexcept { return kinetic_; }

  double hamiltonian(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  Vector gradient(std::span<const double> x) const;

 private:
  std::string name_;
  std::size_t n_ = 0;
  ScalarField h_;
  VectorField grad_h_;
  Matrix j_, d_, j_minus_d_, noise_factor_;
  std::vector<Topology> topology_;
  State equilibrium_;
  std::optional<KineticStructure> kinetic_;
};

/// Largest relative deviation max_i |g_fd - g|_∞ / max(1, |g|_∞) of the analytic
/// gradient from central differences over `samples` states drawn in the model's
/// box (angles in (-π, π], linear coordinates within ±3 of equilibrium).
double gradient_check_error(const SystemSpec& sys, int samples, std::uint64_t seed,
                            double step = 1e-5);

/// f(x) = (J - D)∇H(x).
Vector drift(const SystemSpec& sys, std::span<const double> x);

/// L(x) = H(x) - H(x₀), the closed-form controllability function of a PHS.
double controllability_value(const SystemSpec& sys, std::span<const double> x);

/// f·∇L + ½|∇L|²_Q. The PHS identity with f = (J - D)∇H, Q = 2D, ∇L = ∇H makes it vanish.
double hjb_residual(std::span<const double> f, const Matrix& noise_covariance,
                    std::span<const double> grad_l);
double hjb_residual(const SystemSpec& sys, std::span<const double> x);

/// Wraps angular coordinates into (-π, π]; linear ones pass through.
double wrap_angle(double a);
void normalize_in_place(std::span<const Topology> topology, std::span<double> x);
State normalize(const SystemSpec& sys, std::span<const double> x);

/// Implicit set {x : level(x) < 0}. Exit from the set means level(x) ≥ 0.
struct DomainSpec {
  ScalarField level;
  VectorField gradient;  // optional; central differences are used when empty
  std::string label;

  bool contains(std::span<const double> x) const { return level(x) < 0.0; }
  /// ∇c(x), analytic when available.
  Vector level_gradient(std::span<const double> x) const;
};

/// Set whose level is -c: "exiting" it means entering the closure of the original set.
DomainSpec closure_target(const DomainSpec& d);

/// {x : |x_I| < r} for coordinate subset I (all coordinates when empty).
DomainSpec norm_ball(double radius, std::vector<std::size_t> indices = {}, std::string label = {});
/// {x : x_i < v}
DomainSpec below(std::size_t index, double value, std::string label = {});
/// {x : x_i > v}
DomainSpec above(std::size_t index, double value, std::string label = {});

}  // namespace reach
