#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lp {

// Dense row-major float32 matrix. Entries are finite when built from data.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// Byte-level equality (distinguishes -0.0f from 0.0f).
bool bit_equal(const Matrix& a, const Matrix& b) noexcept;

inline constexpr float kDefaultNormEps = 1e-5f;

// Reductions accumulate left to right in index order so results are
// reproducible bit for bit.
Matrix matmul(const Matrix& a, const Matrix& b);

// Adds bias to every row of m.
void add_row_bias(Matrix& m, std::span<const float> bias);

Matrix row_softmax(const Matrix& a);
void softmax_inplace(std::span<float> x);

std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain,
                            float eps = kDefaultNormEps);
void rms_norm_into(std::span<const float> x, std::span<const float> gain, float eps,
                   std::span<float> out);

std::vector<float> layer_norm(std::span<const float> x, std::span<const float> gain,
                              std::span<const float> bias, float eps = kDefaultNormEps);
void layer_norm_into(std::span<const float> x, std::span<const float> gain,
                     std::span<const float> bias, float eps, std::span<float> out);

float silu(float x) noexcept;
std::vector<float> silu(std::span<const float> x);

// tanh approximation used by GPT-2 family checkpoints.
float gelu(float x) noexcept;

// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Throws DegenerateInputError on a
// zero-norm argument.
double cosine_similarity(std::span<const float> u, std::span<const float> v);

}  // namespace lp
