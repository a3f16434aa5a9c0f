#include "sharplab/matrix.hpp"

#include <algorithm>
#include <cmath>

#include "sharplab/error.hpp"

namespace sharplab {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> values) {
  Matrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.row(i).data();
    const auto ar = a.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double s = ar[k];
      if (s == 0.0) continue;
      const double* br = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: cannot multiply transpose of " + a.shape_string() + " by " +
                     b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto ar = a.row(r);
    const double* br = b.row(r).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double s = ar[i];
      if (s == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) o[j] += s * br[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: cannot multiply " + a.shape_string() + " by transpose of " +
                     b.shape_string());
  }
  Matrix out(a.rows(), b.rows());
  const std::size_t k = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ar = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* br = b.row(j).data();
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += ar[t] * br[t];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                     b.shape_string() + " differ");
  }
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  return out;
}

Matrix operator*(double s, const Matrix& m) {
  Matrix out = m;
  for (double& v : out.values()) v *= s;
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of bounds for " + m.shape_string());
  }
  const auto first = m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
  const auto last = m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols());
  return Matrix(end - begin, m.cols(), std::vector<double>(first, last));
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> indices) {
  Matrix out(indices.size(), m.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= m.rows()) throw ShapeError("gather_rows: index out of range");
    std::copy_n(m.row(indices[i]).data(), m.cols(), out.row(i).data());
  }
  return out;
}

double frobenius_norm(const Matrix& m) {
  if (m.empty()) throw ShapeError("frobenius_norm: empty matrix " + m.shape_string());
  // Scaled accumulation so that entries near the overflow threshold survive.
  double scale = 0.0;
  for (double v : m.values()) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : m.values()) {
    const double t = v / scale;
    acc += t * t;
  }
  return scale * std::sqrt(acc);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  return worst;
}

}  // namespace sharplab
