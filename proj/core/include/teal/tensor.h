#ifndef TEAL_TENSOR_H_
#define TEAL_TENSOR_H_

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "teal/rng.h"

namespace teal {

using Vector = std::vector<float>;

enum class Layout { kRowMajor, kColMajor };

std::string_view layout_name(Layout layout);
Layout parse_layout(std::string_view name);

// Dense 2-D float array with an explicit physical layout. Element (i, j)
// lives at i*cols+j (row-major) or j*rows+i (column-major).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, Layout layout = Layout::kRowMajor);
  Matrix(std::size_t rows, std::size_t cols, Layout layout,
         std::vector<float> data);

  static Matrix identity(std::size_t n, Layout layout = Layout::kRowMajor);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  Layout layout() const { return layout_; }

  std::size_t index(std::size_t i, std::size_t j) const {
    return layout_ == Layout::kRowMajor ? i * cols_ + j : j * rows_ + i;
  }
  float operator()(std::size_t i, std::size_t j) const {
    return data_[index(i, j)];
  }
  float& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  // Contiguous row i; requires row-major.
  std::span<const float> row(std::size_t i) const;
  std::span<float> row(std::size_t i);
  // Contiguous column j; requires column-major.
  std::span<const float> col(std::size_t j) const;

  // Logical equality (ignores layout), bitwise on the float values.
  bool same_values(const Matrix& other) const;
  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Layout layout_ = Layout::kRowMajor;
  std::vector<float> data_;
};

Matrix to_layout(const Matrix& w, Layout layout);

// y = x W^T for W of shape n x m: y_j = sum_i x_i * W(j, i), accumulated in
// float in ascending i. The result is bit-identical for either layout of W.
Vector matmul_dense(std::span<const float> x, const Matrix& w);

// Row-wise matmul_dense over a row-major seq x m activation matrix.
Matrix matmul_rows(const Matrix& x, const Matrix& w);

Vector sample_gaussian(RngStream& rng, std::size_t n, double sigma);
Vector sample_laplace(RngStream& rng, std::size_t n, double scale);

// rows x cols matrix of i.i.d. N(0, sigma^2) entries, generated in logical
// row-major order regardless of the requested layout.
Matrix sample_gaussian_matrix(RngStream& rng, std::size_t rows,
                              std::size_t cols, double sigma, Layout layout);

bool all_finite(std::span<const float> x);

}  // namespace teal

#endif  // TEAL_TENSOR_H_
