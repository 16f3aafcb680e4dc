#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

namespace mgr {

/// Dense row-major matrix of doubles. A vector is a 1 x n matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  /// Builds from external data; rejects NaN/Inf.
  static Matrix from_external(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Matrix transpose() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
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

/// Standard product; each output entry accumulates k = 0..n-1 in order.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a' * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b' without materializing the transpose.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix relu(const Matrix& x);
/// Gradient through relu: grad where pre_activation > 0, else 0.
Matrix relu_backward(const Matrix& pre_activation, const Matrix& grad);

/// Max-subtracted softmax over a 1 x C row.
std::vector<double> softmax(std::span<const double> logits);

struct CrossEntropy {
  double loss = 0.0;
  std::vector<double> grad_logits;
};

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t label);

/// Glorot/Xavier uniform in +-sqrt(6 / (rows + cols)).
Matrix glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed);

struct OptimizerState {
  std::vector<Matrix> velocity;
  std::uint64_t step = 0;
};

/// v <- momentum * v + grad; param <- param - lr * v.
/// Velocity buffers are created (zeroed) on the first call.
void sgd_momentum_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                       OptimizerState& state, double lr, double momentum);

using LossFunction = std::function<double(const std::vector<Matrix>&)>;

/// Central differences (f(p + h e) - f(p - h e)) / 2h for every coordinate of every matrix.
std::vector<Matrix> finite_diff_grad(const LossFunction& loss, std::vector<Matrix> params,
                                     double h = 1e-5);

/// max |a - b| / max(|a|, |b|, floor) over all entries.
double max_relative_error(std::span<const Matrix> analytic, std::span<const Matrix> numeric,
                          double floor = 1e-6);

}  // namespace mgr
