#pragma once

// Dense row-major matrix/vector kernel, just large enough for Jacobian
// assembly and the damped normal-equation solve of the LM trainer.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mtlflow {

class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t len, double fill = 0.0) : data_(len, fill) {}
  Vector(std::initializer_list<double> values) : data_(values) {}
  explicit Vector(std::vector<double> values) : data_(std::move(values)) {}

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> span() noexcept { return data_; }
  std::span<const double> span() const noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  auto begin() noexcept { return data_.begin(); }
  auto end() noexcept { return data_.end(); }
  auto begin() const noexcept { return data_.begin(); }
  auto end() const noexcept { return data_.end(); }

  bool all_finite() const noexcept;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> data_;
};

class Matrix {
 public:
  // Zero-filled rows x cols; both must be >= 1.
  Matrix(std::size_t rows, std::size_t cols);
  // Takes row-major data; throws unless data.size() == rows * cols and every
  // entry is finite.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transposed() const;
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& v);

// a^T v without materializing the transpose.
Vector matvec_transposed(const Matrix& a, const Vector& v);

// a^T a, symmetric by construction (upper triangle mirrored).
Matrix gram(const Matrix& a);

// Solves a x = b for symmetric positive definite `a` by Cholesky
// factorization. Throws InvalidArgument if `a` is not square, not symmetric
// to 1e-9 relative tolerance, or mismatched with b; throws FactorizationError
// on a non-positive (or non-finite) pivot.
Vector solve_spd(const Matrix& a, const Vector& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm_inf(std::span<const double> v);
double norm2(std::span<const double> v);

}  // namespace mtlflow
