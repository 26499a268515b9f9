#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace reach {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles. Sized for the small systems this
/// library works with (n ≤ 32); no expression templates, no aliasing tricks.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  Matrix(const Matrix&) = default;
  Matrix& operator=(const Matrix&) = default;
  // A moved-from matrix is 0×0 rather than keeping stale dimensions.
  Matrix(Matrix&& o) noexcept
      : rows_(std::exchange(o.rows_, 0)), cols_(std::exchange(o.cols_, 0)), data_(std::move(o.data_)) {}
  Matrix& operator=(Matrix&& o) noexcept {
    rows_ = std::exchange(o.rows_, 0);
    cols_ = std::exchange(o.cols_, 0);
    data_ = std::move(o.data_);
    o.data_.clear();
    return *this;
  }

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  Vector column(std::size_t j) const;

  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;
  Matrix block(std::size_t r0, std::size_t c0, std::size_t nr, std::size_t nc) const;
  void set_block(std::size_t r0, std::size_t c0, const Matrix& b);
  /// Rows and columns picked by index lists, in the given order.
  Matrix select(std::span<const std::size_t> row_idx, std::span<const std::size_t> col_idx) const;

  double max_abs() const noexcept;
  double frobenius() const noexcept;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

/// y = a·x written into a caller-owned buffer (hot path, no allocation).
void multiply_into(const Matrix& a, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double max_abs(std::span<const double> a);

/// Largest |a(i,j) - a(j,i)|.
double asymmetry(const Matrix& a);
Matrix symmetrize(const Matrix& a);

/// Kronecker product a ⊗ b.
Matrix kron(const Matrix& a, const Matrix& b);

}  // namespace reach
