#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reach/dynamics.hpp"
#include "reach/matrix.hpp"
#include "reach/system.hpp"

namespace reach {

/// Linear SDE dX = A·X dt + √ε·C dW with optional cached Gramian Σ solving
/// AΣ + ΣAᵀ + CCᵀ = 0.
struct LinearModel {
  Matrix a;
  Matrix c;
  std::optional<Matrix> gramian;

  std::size_t dimension() const noexcept { return a.rows(); }
};

/// Shape-checked constructor: A is n×n, C is n×m.
LinearModel make_linear_model(Matrix a, Matrix c);

/// Returns a copy of `model` with Σ solved and cached. Throws NumericalError if
/// the residual invariant ‖AΣ + ΣAᵀ + CCᵀ‖_max ≤ 1e-10·(1 + ‖CCᵀ‖_max) fails.
LinearModel with_gramian(LinearModel model);

Diffusion to_diffusion(const LinearModel& model, std::string name = "linear");

struct Linearization {
  LinearModel model;
  Matrix hessian;                     // symmetrized
  double hessian_asymmetry = 0.0;     // before symmetrization
  std::vector<std::string> warnings;  // e.g. asymmetry above 1e-4
};

/// A = (J - D)·Hess H(x_eq) with the Hessian from central differences of ∇H,
/// C = √(2D).
Linearization linearize(const SystemSpec& sys, std::span<const double> x_eq, double fd_step = 1e-5);

/// Σ with AΣ + ΣAᵀ = -Q, from the Kronecker system (I⊗A + A⊗I)·vec Σ = -vec Q.
/// IllPosedError when the system is singular, ArgumentError when A is not Hurwitz.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// ‖AΣ + ΣAᵀ + Q‖_max
double lyapunov_residual(const Matrix& a, const Matrix& sigma, const Matrix& q);

/// inf over |y| = r of ½yᵀΣ⁻¹y, i.e. r²/(2·λ_max(Σ)).
double sphere_infimum(const Matrix& sigma, double r);

/// True iff AᵀP + PA = -I has a symmetric positive definite solution.
bool hurwitz_check(const Matrix& a);

/// Rank of the Kalman matrix [C | AC | … | Aⁿ⁻¹C].
std::size_t controllability_rank(const Matrix& a, const Matrix& c);
Matrix kalman_matrix(const Matrix& a, const Matrix& c);

}  // namespace reach
