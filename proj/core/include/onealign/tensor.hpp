#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace onealign {

class Rng;

/// Dense row-major f64 matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dot product with four interleaved accumulators combined in a fixed order,
/// so results are reproducible bit-for-bit.
double dot(std::span<const double> a, std::span<const double> b);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

/// A trainable (or frozen) tensor with its gradient buffer.
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;
  /// Decoupled weight decay applies only when set (weights, not biases).
  bool decay = true;

  Param() = default;
  Param(std::string name, std::vector<std::size_t> shape, bool trainable = true, bool decay = true);

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad();
};

using ParamList = std::vector<Param*>;

void zero_grads(const ParamList& params);
std::size_t count_parameters(const ParamList& params, bool trainable_only = true);

/// Concatenated values of the trainable params, and the inverse.
std::vector<double> flatten_values(const ParamList& params);
std::vector<double> flatten_grads(const ParamList& params);
void assign_values(const ParamList& params, std::span<const double> flat);

/// Rounds every value to the nearest f32 (storage precision of checkpoints).
void round_to_f32(std::span<double> values);

void fill_uniform(std::span<double> values, Rng& rng, double bound);
void fill_normal(std::span<double> values, Rng& rng, double stddev);

}  // namespace onealign
