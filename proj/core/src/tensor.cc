#include "teal/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "teal/error.h"

namespace teal {

std::string_view layout_name(Layout layout) {
  return layout == Layout::kRowMajor ? "RowMajor" : "ColMajor";
}

Layout parse_layout(std::string_view name) {
  if (name == "RowMajor") return Layout::kRowMajor;
  if (name == "ColMajor") return Layout::kColMajor;
  throw ValidationError("unknown layout '" + std::string(name) + "'");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, Layout layout)
    : rows_(rows), cols_(cols), layout_(layout), data_(rows * cols, 0.0f) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Layout layout,
               std::vector<float> data)
    : rows_(rows), cols_(cols), layout_(layout), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ValidationError("matrix data length " + std::to_string(data_.size()) +
                          " != " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n, Layout layout) {
  Matrix m(n, n, layout);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

std::span<const float> Matrix::row(std::size_t i) const {
  if (layout_ != Layout::kRowMajor) throw ValidationError("row() needs RowMajor");
  return std::span<const float>(data_).subspan(i * cols_, cols_);
}

std::span<float> Matrix::row(std::size_t i) {
  if (layout_ != Layout::kRowMajor) throw ValidationError("row() needs RowMajor");
  return std::span<float>(data_).subspan(i * cols_, cols_);
}

std::span<const float> Matrix::col(std::size_t j) const {
  if (layout_ != Layout::kColMajor) throw ValidationError("col() needs ColMajor");
  return std::span<const float>(data_).subspan(j * rows_, rows_);
}

bool Matrix::same_values(const Matrix& other) const {
  if (rows_ != other.rows_ || cols_ != other.cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      const float a = (*this)(i, j);
      const float b = other(i, j);
      if (std::memcmp(&a, &b, sizeof(float)) != 0) return false;
    }
  }
  return true;
}

Matrix to_layout(const Matrix& w, Layout layout) {
  if (w.layout() == layout) return w;
  Matrix out(w.rows(), w.cols(), layout);
  for (std::size_t i = 0; i < w.rows(); ++i) {
    for (std::size_t j = 0; j < w.cols(); ++j) out(i, j) = w(i, j);
  }
  return out;
}

Vector matmul_dense(std::span<const float> x, const Matrix& w) {
  if (x.size() != w.cols()) {
    throw ValidationError("matmul_dense: x has length " +
                          std::to_string(x.size()) + " but W is " +
                          std::to_string(w.rows()) + "x" +
                          std::to_string(w.cols()));
  }
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  Vector y(n, 0.0f);
  const float* wd = w.data().data();
  if (w.layout() == Layout::kColMajor) {
    // Column streaming: y += x_i * W[:, i]. Each y_j still sees its terms in
    // ascending i, so this matches the row-major dot-product order exactly.
    float* yd = y.data();
    for (std::size_t i = 0; i < m; ++i) {
      const float xi = x[i];
      const float* column = wd + i * n;
      for (std::size_t j = 0; j < n; ++j) yd[j] += xi * column[j];
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const float* r = wd + j * m;
      float acc = 0.0f;
      for (std::size_t i = 0; i < m; ++i) acc += x[i] * r[i];
      y[j] = acc;
    }
  }
  return y;
}

Matrix matmul_rows(const Matrix& x, const Matrix& w) {
  if (x.layout() != Layout::kRowMajor) {
    throw ValidationError("matmul_rows: activations must be RowMajor");
  }
  Matrix y(x.rows(), w.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vector out = matmul_dense(x.row(r), w);
    std::copy(out.begin(), out.end(), y.row(r).begin());
  }
  return y;
}

Vector sample_gaussian(RngStream& rng, std::size_t n, double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("sample_gaussian: sigma must be > 0");
  Vector out(n);
  // Box-Muller, both outputs used.
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = rng.next_uniform();
    const double u2 = rng.next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    out[i] = static_cast<float>(sigma * (r * std::cos(theta)));
    if (i + 1 < n) out[i + 1] = static_cast<float>(sigma * (r * std::sin(theta)));
  }
  return out;
}

Vector sample_laplace(RngStream& rng, std::size_t n, double scale) {
  if (!(scale > 0.0)) throw ValidationError("sample_laplace: scale must be > 0");
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.next_uniform() - 0.5;
    const double mag = -std::log1p(-2.0 * std::abs(u));
    out[i] = static_cast<float>(scale * (u < 0.0 ? -mag : mag));
  }
  return out;
}

Matrix sample_gaussian_matrix(RngStream& rng, std::size_t rows,
                              std::size_t cols, double sigma, Layout layout) {
  Vector flat = sample_gaussian(rng, rows * cols, sigma);
  Matrix m(rows, cols, Layout::kRowMajor, std::move(flat));
  return to_layout(m, layout);
}

bool all_finite(std::span<const float> x) {
  for (float v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace teal
