#pragma once

#include <functional>
#include <string>
#include <vector>

#include "chronofuse/tape.hpp"

namespace chronofuse {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  int worst_index = -1;
  long long checked = 0;
  bool passed = false;
};

/// Compares analytic gradients against central finite differences.
///
/// `build` must construct the loss (a single-element Var) on the given tape
/// using the supplied parameter tensors via Tape::param. It is evaluated
/// repeatedly under perturbed parameter values, so it must be deterministic;
/// a double evaluation guards that and raises DeterminismError on drift.
///
/// Relative error per coordinate: |analytic - numeric| / max(1e-8, |numeric|),
/// with the exact-zero pair treated as zero error. `stride` checks every
/// stride-th coordinate (1 = all).
GradCheckReport grad_check(const std::function<Var(Tape&)>& build,
                           const std::vector<Tensor*>& params,
                           double eps = 1e-5, double tol = 1e-4,
                           int stride = 1);

}  // namespace chronofuse
