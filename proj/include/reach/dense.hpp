#pragma once

#include <optional>

#include "reach/matrix.hpp"

namespace reach {

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // column k is the eigenvector of values[k]
};

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
/// 1e-13·‖M‖_F. Throws ArgumentError for non-square or visibly asymmetric input.
SymmetricEigen eigen_sym(const Matrix& m);

/// Symmetric square root S with S·S = Q. Eigenvalues in [-1e-12·max(1,‖Q‖), 0)
/// are clamped to zero; anything more negative raises NotPsdError.
Matrix psd_sqrt(const Matrix& q);

/// Solves A·x = b by LU with partial pivoting. Raises IllPosedError when a
/// pivot falls below n·2⁻⁵²·max|A|.
Vector solve(const Matrix& a, std::span<const double> b);
Matrix inverse(const Matrix& a);

/// Lower-triangular L with L·Lᵀ = A, or nullopt when A is not positive definite.
std::optional<Matrix> cholesky(const Matrix& a);

double log_det_spd(const Matrix& a);

/// Rank from Householder QR with column pivoting: number of |R_kk| above tol.
std::size_t numerical_rank(const Matrix& m, double tol);

}  // namespace reach
