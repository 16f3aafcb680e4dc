#include "mgr/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "mgr/error.hpp"

namespace mgr {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(what) + ": " + dims(a) + " vs " + dims(b));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) throw ShapeError("matrix data length does not match " + dims(*this));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::from_external(std::size_t rows, std::size_t cols, std::vector<double> data) {
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw InvalidInput("non-finite value in external matrix data");
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "subtract");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }

// The i-k-j loops below keep a fixed accumulation order per output entry
// (k ascending), so results are reproducible run to run.
Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: " + dims(a) + " * " + dims(b));
  Matrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* o = out.data().data() + i * n;
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const double* brow = b.data().data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn: " + dims(a) + "' * " + dims(b));
  Matrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* brow = b.data().data() + k * n;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      double* o = out.data().data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt: " + dims(a) + " * " + dims(b) + "'");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < arow.size(); ++k) acc += arow[k] * brow[k];
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix relu(const Matrix& x) {
  Matrix out = x;
  for (double& v : out.data()) v = std::max(0.0, v);
  return out;
}

Matrix relu_backward(const Matrix& pre_activation, const Matrix& grad) {
  require_same_shape(pre_activation, grad, "relu_backward");
  Matrix out = grad;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!(pre_activation.data()[i] > 0.0)) out.data()[i] = 0.0;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidInput("softmax of empty vector");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size())
    throw InvalidInput("label " + std::to_string(label) + " out of range for " +
                       std::to_string(logits.size()) + " classes");
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - mx);
  const double log_z = mx + std::log(sum);

  CrossEntropy ce;
  ce.loss = log_z - logits[label];
  ce.grad_logits.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) ce.grad_logits[i] = std::exp(logits[i] - log_z);
  ce.grad_logits[label] -= 1.0;
  return ce;
}

Matrix glorot_init(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  if (rows == 0 || cols == 0) throw InvalidInput("glorot_init needs positive dimensions");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = dist(rng);
  return m;
}

Matrix glorot_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return glorot_init(rows, cols, rng);
}

void sgd_momentum_step(std::span<Matrix* const> params, std::span<const Matrix> grads,
                       OptimizerState& state, double lr, double momentum) {
  if (params.size() != grads.size()) throw ShapeError("sgd: parameter/gradient count mismatch");
  if (state.velocity.empty()) {
    for (const Matrix* p : params) state.velocity.emplace_back(p->rows(), p->cols());
  }
  if (state.velocity.size() != params.size()) throw ShapeError("sgd: velocity count mismatch");

  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    Matrix& v = state.velocity[i];
    require_same_shape(p, grads[i], "sgd gradient");
    require_same_shape(p, v, "sgd velocity");
    auto& pd = p.data();
    auto& vd = v.data();
    const auto& gd = grads[i].data();
    for (std::size_t j = 0; j < pd.size(); ++j) {
      vd[j] = momentum * vd[j] + gd[j];
      pd[j] -= lr * vd[j];
    }
  }
  ++state.step;
}

std::vector<Matrix> finite_diff_grad(const LossFunction& loss, std::vector<Matrix> params, double h) {
  if (!(h > 0.0)) throw InvalidInput("finite difference step must be positive");
  std::vector<Matrix> grads;
  grads.reserve(params.size());
  for (const Matrix& p : params) grads.emplace_back(p.rows(), p.cols());

  for (std::size_t m = 0; m < params.size(); ++m) {
    auto& values = params[m].data();
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + h;
      const double up = loss(params);
      values[j] = saved - h;
      const double down = loss(params);
      values[j] = saved;
      grads[m].data()[j] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

double max_relative_error(std::span<const Matrix> analytic, std::span<const Matrix> numeric, double floor) {
  if (analytic.size() != numeric.size()) throw ShapeError("gradient list length mismatch");
  double worst = 0.0;
  for (std::size_t m = 0; m < analytic.size(); ++m) {
    require_same_shape(analytic[m], numeric[m], "gradient compare");
    for (std::size_t j = 0; j < analytic[m].size(); ++j) {
      const double a = analytic[m].data()[j];
      const double n = numeric[m].data()[j];
      const double denom = std::max({std::abs(a), std::abs(n), floor});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
  }
  return worst;
}

}  // namespace mgr
