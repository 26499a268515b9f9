#include "reach/dense.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reach/errors.hpp"

namespace reach {

namespace {

constexpr double kMachEps = std::numeric_limits<double>::epsilon();

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen eigen_sym(const Matrix& m) {
  if (!m.is_square()) throw ArgumentError("eigen_sym: matrix not square");
  const std::size_t n = m.rows();
  if (asymmetry(m) > 1e-10 * std::max(1.0, m.max_abs()))
    throw ArgumentError("eigen_sym: matrix not symmetric");

  Matrix a = symmetrize(m);
  Matrix v = Matrix::identity(n);
  const double target = 1e-13 * a.frobenius();

  for (int sweep = 0; sweep < 100 && off_diagonal_norm(a) > target; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle zeroing a(p,q); the smaller root of t² + 2θt - 1 = 0.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

Matrix psd_sqrt(const Matrix& q) {
  const auto eig = eigen_sym(q);
  const std::size_t n = q.rows();
  const double clamp = 1e-12 * std::max(1.0, q.max_abs());
  Matrix s(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    double lambda = eig.values[k];
    if (lambda < -clamp) throw NotPsdError("psd_sqrt: matrix has a negative eigenvalue");
    const double root = std::sqrt(std::max(lambda, 0.0));
    if (root == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        s(i, j) += root * eig.vectors(i, k) * eig.vectors(j, k);
  }
  return symmetrize(s);
}

Vector solve(const Matrix& a, std::span<const double> b) {
  if (!a.is_square() || a.rows() != b.size()) throw ArgumentError("solve: dimension mismatch");
  const std::size_t n = a.rows();
  Matrix lu = a;
  Vector x(b.begin(), b.end());
  const double tiny = static_cast<double>(n) * kMachEps * std::max(a.max_abs(), 1e-300);

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    if (std::abs(lu(piv, k)) <= tiny) throw IllPosedError("solve: matrix is singular");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(x[k], x[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
      x[i] -= f * x[k];
    }
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = x[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= lu(k, j) * x[j];
    x[k] = s / lu(k, k);
  }
  return x;
}

Matrix inverse(const Matrix& a) {
  const std::size_t n = a.rows();
  Matrix inv(n, n);
  Vector e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    const Vector col = solve(a, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
  }
  return inv;
}

std::optional<Matrix> cholesky(const Matrix& a) {
  if (!a.is_square()) throw ArgumentError("cholesky: matrix not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

double log_det_spd(const Matrix& a) {
  const auto l = cholesky(a);
  if (!l) throw NotPsdError("log_det_spd: matrix not positive definite");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) s += std::log((*l)(i, i));
  return 2.0 * s;
}

std::size_t numerical_rank(const Matrix& m, double tol) {
  Matrix r = m;
  const std::size_t rows = r.rows();
  const std::size_t cols = r.cols();
  std::vector<double> colnorm(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) colnorm[j] += r(i, j) * r(i, j);

  std::size_t rank = 0;
  const std::size_t steps = std::min(rows, cols);
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t piv = k;
    for (std::size_t j = k + 1; j < cols; ++j)
      if (colnorm[j] > colnorm[piv]) piv = j;
    if (piv != k) {
      for (std::size_t i = 0; i < rows; ++i) std::swap(r(i, k), r(i, piv));
      std::swap(colnorm[k], colnorm[piv]);
    }

    double alpha = 0.0;
    for (std::size_t i = k; i < rows; ++i) alpha += r(i, k) * r(i, k);
    alpha = std::sqrt(alpha);
    if (alpha <= tol) break;
    ++rank;

    // Householder reflector sending r(k:,k) to ∓alpha·e₁.
    if (r(k, k) > 0) alpha = -alpha;
    Vector v(rows - k);
    for (std::size_t i = k; i < rows; ++i) v[i - k] = r(i, k);
    v[0] -= alpha;
    const double vnorm2 = dot(v, v);
    if (vnorm2 > 0.0) {
      for (std::size_t j = k; j < cols; ++j) {
        double s = 0.0;
        for (std::size_t i = k; i < rows; ++i) s += v[i - k] * r(i, j);
        s = 2.0 * s / vnorm2;
        for (std::size_t i = k; i < rows; ++i) r(i, j) -= s * v[i - k];
      }
    }
    // Downdate remaining column norms from scratch; matrices here are tiny.
    for (std::size_t j = k + 1; j < cols; ++j) {
      colnorm[j] = 0.0;
      for (std::size_t i = k + 1; i < rows; ++i) colnorm[j] += r(i, j) * r(i, j);
    }
  }
  return rank;
}

}  // namespace reach
