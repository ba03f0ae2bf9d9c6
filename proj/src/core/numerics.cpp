#include "layerpainter/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "layerpainter/errors.hpp"

namespace lp {

namespace {

std::string dims(std::size_t r, std::size_t c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix " + dims(rows, cols) + " given " + std::to_string(data_.size()) +
                     " values");
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw ShapeError("matrix entry " + std::to_string(i) + " is not finite");
    }
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0f;
  return m;
}

bool bit_equal(const Matrix& a, const Matrix& b) noexcept {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return a.size() == 0 || std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + dims(a.rows(), a.cols()) + " times " + dims(b.rows(), b.cols()));
  }
  Matrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t n = b.cols();
  const float* bp = b.data().data();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    float* crow = c.row(i).data();
    const float* arow = a.row(i).data();
    // k-outer keeps each output element's sum in ascending k order.
    for (std::size_t k = 0; k < inner; ++k) {
      const float aik = arow[k];
      const float* brow = bp + k * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

void add_row_bias(Matrix& m, std::span<const float> bias) {
  require_same_length(m.cols(), bias.size(), "add_row_bias");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t j = 0; j < bias.size(); ++j) row[j] += bias[j];
  }
}

void softmax_inplace(std::span<float> x) {
  if (x.empty()) throw ShapeError("softmax of empty row");
  const float mx = *std::max_element(x.begin(), x.end());
  float sum = 0.0f;
  for (float& v : x) {
    v = std::exp(v - mx);
    sum += v;
  }
  const float inv = 1.0f / sum;
  for (float& v : x) v *= inv;
}

Matrix row_softmax(const Matrix& a) {
  if (a.empty()) throw ShapeError("row_softmax of empty matrix");
  Matrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) softmax_inplace(out.row(r));
  return out;
}

void rms_norm_into(std::span<const float> x, std::span<const float> gain, float eps,
                   std::span<float> out) {
  require_same_length(x.size(), gain.size(), "rms_norm");
  require_same_length(x.size(), out.size(), "rms_norm output");
  if (x.empty()) throw ShapeError("rms_norm of empty vector");
  float ss = 0.0f;
  for (float v : x) ss += v * v;
  const float scale = 1.0f / std::sqrt(ss / static_cast<float>(x.size()) + eps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * scale * gain[i];
}

std::vector<float> rms_norm(std::span<const float> x, std::span<const float> gain, float eps) {
  std::vector<float> out(x.size());
  rms_norm_into(x, gain, eps, out);
  return out;
}

void layer_norm_into(std::span<const float> x, std::span<const float> gain,
                     std::span<const float> bias, float eps, std::span<float> out) {
  require_same_length(x.size(), gain.size(), "layer_norm");
  require_same_length(x.size(), bias.size(), "layer_norm bias");
  require_same_length(x.size(), out.size(), "layer_norm output");
  if (x.empty()) throw ShapeError("layer_norm of empty vector");
  const float n = static_cast<float>(x.size());
  float sum = 0.0f;
  for (float v : x) sum += v;
  const float mean = sum / n;
  float var = 0.0f;
  for (float v : x) var += (v - mean) * (v - mean);
  const float scale = 1.0f / std::sqrt(var / n + eps);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * scale * gain[i] + bias[i];
}

std::vector<float> layer_norm(std::span<const float> x, std::span<const float> gain,
                              std::span<const float> bias, float eps) {
  std::vector<float> out(x.size());
  layer_norm_into(x, gain, bias, eps, out);
  return out;
}

float silu(float x) noexcept { return x / (1.0f + std::exp(-x)); }

std::vector<float> silu(std::span<const float> x) {
  std::vector<float> out(x.size());
  std::transform(x.begin(), x.end(), out.begin(), [](float v) { return silu(v); });
  return out;
}

float gelu(float x) noexcept {
  constexpr float kSqrt2OverPi = 0.7978845608028654f;
  return 0.5f * x * (1.0f + std::tanh(kSqrt2OverPi * (x + 0.044715f * x * x * x)));
}

double cosine_similarity(std::span<const float> u, std::span<const float> v) {
  require_same_length(u.size(), v.size(), "cosine_similarity");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * v[i];
    nu += static_cast<double>(u[i]) * u[i];
    nv += static_cast<double>(v[i]) * v[i];
  }
  if (nu == 0.0 || nv == 0.0) throw DegenerateInputError("cosine_similarity of a zero-norm vector");
  // sqrt(nu * nv) rather than sqrt(nu) * sqrt(nv): gives exactly 1 for u == v.
  return std::clamp(dot / std::sqrt(nu * nv), -1.0, 1.0);
}

}  // namespace lp
