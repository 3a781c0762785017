#include "mtlflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtlflow/error.hpp"

namespace mtlflow {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool Vector::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) throw InvalidArgument("matrix dimensions must be >= 1");
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows == 0 || cols == 0) throw InvalidArgument("matrix dimensions must be >= 1");
  if (data_.size() != rows * cols) {
    throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  if (!all_finite()) throw InvalidArgument("matrix entries must be finite");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  if (rows_ == 0 || cols_ == 0) throw InvalidArgument("matrix dimensions must be >= 1");
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InvalidArgument("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!all_finite()) throw InvalidArgument("matrix entries must be finite");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw InvalidArgument("matmul: " + dims(a) + " times " + dims(b));
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

Vector matvec(const Matrix& a, const Vector& v) {
  if (a.cols() != v.size())
    throw InvalidArgument("matvec: " + dims(a) + " times vector of length " +
                          std::to_string(v.size()));
  Vector out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) out[i] = dot(a.row(i), v.span());
  return out;
}

Vector matvec_transposed(const Matrix& a, const Vector& v) {
  if (a.rows() != v.size())
    throw InvalidArgument("matvec_transposed: " + dims(a) + "^T times vector of length " +
                          std::to_string(v.size()));
  Vector out(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double vi = v[i];
    const auto r = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += r[j] * vi;
  }
  return out;
}

Matrix gram(const Matrix& a) {
  const std::size_t n = a.cols();
  Matrix g(n, n);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t p = 0; p < n; ++p) {
      const double rp = r[p];
      if (rp == 0.0) continue;
      auto g_row = g.row(p);
      for (std::size_t q = p; q < n; ++q) g_row[q] += rp * r[q];
    }
  }
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = p + 1; q < n; ++q) g(q, p) = g(p, q);
  return g;
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw InvalidArgument("solve_spd: matrix is " + dims(a) + ", not square");
  if (b.size() != n)
    throw InvalidArgument("solve_spd: rhs length " + std::to_string(b.size()) +
                          " does not match " + dims(a));

  double scale = 1.0;
  for (double x : a.data()) scale = std::max(scale, std::abs(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-9 * scale)
        throw InvalidArgument("solve_spd: matrix is not symmetric");

  // Lower-triangular factor L with a = L L^T, stored in place of the lower half.
  Matrix l = a;
  for (std::size_t j = 0; j < n; ++j) {
    double diag = l(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag))
      throw FactorizationError("solve_spd: non-positive pivot at column " + std::to_string(j));
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    const auto lj = l.row(j);
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto li = l.row(i);
      double s = li[j];
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }

  Vector x = b;
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = l.row(i);
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
    x[i] = s / l(i, i);
  }
  return x;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace mtlflow
