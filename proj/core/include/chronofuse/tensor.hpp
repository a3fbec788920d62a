#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chronofuse {

/// Dense row-major array of doubles with an optional gradient buffer of the
/// same layout. Rank 0 (scalar) through rank 3 are used.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape_in);

  static Tensor zeros(std::vector<int> shape);
  static Tensor from(std::vector<int> shape, std::vector<double> values);
  static Tensor scalar(double v);

  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }
  std::int64_t size() const { return static_cast<std::int64_t>(data.size()); }

  double& at(int i) { return data[static_cast<std::size_t>(i)]; }
  double at(int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
  double& at(int i, int j, int k) {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }
  double at(int i, int j, int k) const {
    return data[(static_cast<std::size_t>(i) * shape[1] + j) * shape[2] + k];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool operator==(const Tensor& o) const {
    return shape == o.shape && data == o.data;
  }
  std::string shape_str() const;

  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();
  void zero_grad();
  /// Throws NumericError if any element is non-finite.
  void check_finite(const std::string& context) const;

  std::vector<int> shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty, or data.size() elements
};

std::int64_t shape_product(const std::vector<int>& shape);

}  // namespace chronofuse
