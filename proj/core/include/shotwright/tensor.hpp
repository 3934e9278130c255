#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace shotwright {

/// Dense row-major tensor of doubles. Ops treat it as a matrix whose column
/// count is the last dimension and whose row count is everything else.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) { return Tensor({rows, cols}, fill); }
  static Tensor like(const Tensor& other, double fill = 0.0) { return Tensor(other.shape_, fill); }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  std::size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
  std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const { return std::span<const double>(data_).subspan(r * cols(), cols()); }

  void fill(double v);
  /// Same data viewed with another shape of equal element count.
  Tensor reshaped(std::vector<std::size_t> shape) const;

  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// Dense kernels used by the ops. All accumulate into `out` (out += ...).
namespace kernels {
/// out[M×N] += a[M×K] · b[K×N]
void matmul_acc(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
                std::size_t k, std::size_t n);
/// out[M×K] += a[M×N] · b[K×N]ᵀ
void matmul_bt_acc(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
                   std::size_t n, std::size_t k);
/// out[K×N] += a[M×K]ᵀ · b[M×N]
void matmul_at_acc(std::span<const double> a, std::span<const double> b, std::span<double> out, std::size_t m,
                   std::size_t k, std::size_t n);
}  // namespace kernels

}  // namespace shotwright
