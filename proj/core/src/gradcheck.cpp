#include "chronofuse/gradcheck.hpp"

#include <cmath>

#include "chronofuse/errors.hpp"

namespace chronofuse {

namespace {

double eval_loss(const std::function<Var(Tape&)>& build) {
  Tape tape;
  Var loss = build(tape);
  const Tensor& t = tape.val(loss);
  if (t.size() != 1)
    throw ContractError("grad_check: loss must be a single element, got " +
                        t.shape_str());
  return t.data[0];
}

}  // namespace

GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           const std::vector<Tensor*>& params, double eps,
                           double tol, int stride) {
  if (stride < 1) throw ContractError("grad_check: stride must be >= 1");
  const double l0 = eval_loss(build);
  const double l1 = eval_loss(build);
  if (l0 != l1)
    throw DeterminismError(
        "grad_check: loss closure is not deterministic (" +
        std::to_string(l0) + " vs " + std::to_string(l1) + ")");

  for (Tensor* p : params) {
    if (!p) throw ContractError("grad_check: null parameter");
    p->grad.clear();
  }
  {
    Tape tape;
    Var loss = build(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor* p : params)
    analytic.push_back(p->has_grad() ? p->grad
                                     : std::vector<double>(p->data.size(), 0.0));

  GradCheckReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor* p = params[pi];
    for (std::size_t idx = 0; idx < p->data.size();
         idx += static_cast<std::size_t>(stride)) {
      const double orig = p->data[idx];
      p->data[idx] = orig + eps;
      const double fp = eval_loss(build);
      p->data[idx] = orig - eps;
      const double fm = eval_loss(build);
      p->data[idx] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[pi][idx];
      const double rel =
          std::fabs(a - numeric) / std::max(1e-8, std::fabs(numeric));
      ++rep.checked;
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_param = "param[" + std::to_string(pi) + "]";
        rep.worst_index = static_cast<int>(idx);
      }
    }
  }
  rep.passed = rep.max_rel_err < tol;
  return rep;
}

}  // namespace chronofuse
