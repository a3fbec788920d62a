#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "chronofuse/tensor.hpp"

namespace chronofuse {

/// Adam with bias correction. State is keyed by tensor identity, so the
/// same optimizer can be reused across steps while parameters stay put.
class Adam {
 public:
  explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies one update to every tensor (each must carry a gradient) and
  /// leaves gradients zeroed for the next accumulation.
  void step(const std::vector<Tensor*>& params);

  void reset();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::int64_t t() const { return t_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  double lr_, beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::map<Tensor*, Moments> state_;
};

}  // namespace chronofuse
