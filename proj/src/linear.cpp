#include "reach/linear.hpp"

#include <cmath>
#include <limits>

#include "reach/dense.hpp"
#include "reach/errors.hpp"

namespace reach {

namespace {

// AX + XAᵀ = -Q via vectorization; no stability check.
Matrix solve_lyapunov_system(const Matrix& a, const Matrix& q) {
  const std::size_t n = a.rows();
  const Matrix eye = Matrix::identity(n);
  const Matrix k = kron(eye, a) + kron(a, eye);
  // Column-major vec.
  Vector rhs(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) rhs[j * n + i] = -q(i, j);
  Vector v;
  try {
    v = solve(k, rhs);
  } catch (const IllPosedError&) {
    throw IllPosedError("solve_lyapunov: Lyapunov operator is singular (λᵢ + λⱼ = 0)");
  }
  Matrix x(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) x(i, j) = v[j * n + i];
  return symmetrize(x);
}

}  // namespace

LinearModel make_linear_model(Matrix a, Matrix c) {
  if (!a.is_square() || a.rows() == 0) throw ArgumentError("LinearModel: A must be square");
  if (c.rows() != a.rows() || c.cols() == 0) throw ArgumentError("LinearModel: C must be n×m");
  return LinearModel{std::move(a), std::move(c), std::nullopt};
}

LinearModel with_gramian(LinearModel model) {
  const Matrix q = model.c * model.c.transpose();
  Matrix sigma = solve_lyapunov(model.a, q);
  const double res = lyapunov_residual(model.a, sigma, q);
  if (res > 1e-10 * (1.0 + q.max_abs()))
    throw NumericalError("with_gramian: Lyapunov residual " + std::to_string(res) + " too large");
  model.gramian = std::move(sigma);
  return model;
}

Diffusion to_diffusion(const LinearModel& model, std::string name) {
  auto drift = [a = model.a](std::span<const double> x, std::span<double> out) {
    multiply_into(a, x, out);
  };
  return Diffusion(std::move(name), drift, model.c);
}

Linearization linearize(const SystemSpec& sys, std::span<const double> x_eq, double fd_step) {
  const std::size_t n = sys.dimension();
  if (x_eq.size() != n) throw ArgumentError("linearize: dimension mismatch");
  if (!(fd_step > 0.0)) throw ArgumentError("linearize: fd_step must be positive");
  if (norm2(sys.gradient(x_eq)) > 1e-6) throw ArgumentError("linearize: ∇H does not vanish at x_eq");

  Matrix hess(n, n);
  Vector xp(x_eq.begin(), x_eq.end());
  Vector gp(n), gm(n);
  for (std::size_t j = 0; j < n; ++j) {
    xp[j] = x_eq[j] + fd_step;
    sys.gradient(xp, gp);
    xp[j] = x_eq[j] - fd_step;
    sys.gradient(xp, gm);
    xp[j] = x_eq[j];
    for (std::size_t i = 0; i < n; ++i) hess(i, j) = (gp[i] - gm[i]) / (2.0 * fd_step);
  }

  Linearization out;
  out.hessian_asymmetry = asymmetry(hess);
  if (out.hessian_asymmetry > 1e-4)
    out.warnings.push_back("Hessian asymmetry " + std::to_string(out.hessian_asymmetry) +
                           " exceeds 1e-4 before symmetrization");
  out.hessian = symmetrize(hess);
  out.model = make_linear_model(sys.drift_matrix() * out.hessian, sys.noise_factor());
  return out;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  if (!a.is_square() || q.rows() != a.rows() || q.cols() != a.cols())
    throw ArgumentError("solve_lyapunov: dimension mismatch");
  if (asymmetry(q) > 1e-12 * std::max(1.0, q.max_abs()))
    throw ArgumentError("solve_lyapunov: Q must be symmetric");
  Matrix sigma = solve_lyapunov_system(a, q);
  if (!hurwitz_check(a)) throw ArgumentError("solve_lyapunov: A is not Hurwitz");
  return sigma;
}

double lyapunov_residual(const Matrix& a, const Matrix& sigma, const Matrix& q) {
  return (a * sigma + sigma * a.transpose() + q).max_abs();
}

double sphere_infimum(const Matrix& sigma, double r) {
  if (!(r > 0.0)) throw ArgumentError("sphere_infimum: r must be positive");
  const auto eig = eigen_sym(sigma);
  if (!(eig.values.front() > 0.0)) throw ArgumentError("sphere_infimum: Σ is not positive definite");
  return r * r / (2.0 * eig.values.back());
}

bool hurwitz_check(const Matrix& a) {
  if (!a.is_square()) throw ArgumentError("hurwitz_check: matrix not square");
  Matrix p;
  try {
    p = solve_lyapunov_system(a.transpose(), Matrix::identity(a.rows()));
  } catch (const IllPosedError&) {
    return false;
  }
  return cholesky(p).has_value();
}

Matrix kalman_matrix(const Matrix& a, const Matrix& c) {
  const std::size_t n = a.rows();
  const std::size_t m = c.cols();
  Matrix k(n, n * m);
  Matrix block = c;
  for (std::size_t p = 0; p < n; ++p) {
    k.set_block(0, p * m, block);
    block = a * block;
  }
  return k;
}

std::size_t controllability_rank(const Matrix& a, const Matrix& c) {
  if (!a.is_square() || c.rows() != a.rows()) throw ArgumentError("controllability_rank: shape mismatch");
  const Matrix k = kalman_matrix(a, c);
  double largest = 0.0;
  for (std::size_t j = 0; j < k.cols(); ++j) largest = std::max(largest, norm2(k.column(j)));
  const double tol = static_cast<double>(a.rows()) * std::numeric_limits<double>::epsilon() * largest;
  return numerical_rank(k, tol);
}

}  // namespace reach
