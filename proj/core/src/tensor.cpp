#include "chronofuse/tensor.hpp"

#include <cmath>
#include <sstream>

#include "chronofuse/errors.hpp"

namespace chronofuse {

std::int64_t shape_product(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative extent in shape " + shape_str());
  }
  data.assign(static_cast<std::size_t>(shape_product(shape)), 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values) {
  Tensor t;
  t.shape = std::move(shape);
  if (static_cast<std::int64_t>(values.size()) != shape_product(t.shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + t.shape_str());
  }
  t.data = std::move(values);
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t;
  t.shape = {1};
  t.data = {v};
  return t;
}

std::string Tensor::shape_str() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

void Tensor::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
  if (!grad.empty()) grad.assign(data.size(), 0.0);
}

void Tensor::check_finite(const std::string& context) const {
  for (double v : data) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite value in " + context);
    }
  }
}

}  // namespace chronofuse
