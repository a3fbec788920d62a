#include "chronofuse/optim.hpp"

#include <cmath>

#include "chronofuse/errors.hpp"

namespace chronofuse {

void Adam::step(const std::vector<Tensor*>& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (Tensor* p : params) {
    if (!p) throw ContractError("adam: null parameter");
    if (!p->has_grad())
      throw ContractError("adam: parameter has no gradient; run backward first");
    Moments& st = state_[p];
    if (st.m.empty()) {
      st.m.assign(p->data.size(), 0.0);
      st.v.assign(p->data.size(), 0.0);
    }
    for (std::size_t i = 0; i < p->data.size(); ++i) {
      const double g = p->grad[i];
      st.m[i] = beta1_ * st.m[i] + (1.0 - beta1_) * g;
      st.v[i] = beta2_ * st.v[i] + (1.0 - beta2_) * g * g;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      p->data[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
    p->zero_grad();
  }
}

void Adam::reset() {
  t_ = 0;
  state_.clear();
}

}  // namespace chronofuse
