#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace chronofuse {

enum class StatTestKind { kPermutation, kPairedT };

struct StatTestResult {
  StatTestKind kind = StatTestKind::kPermutation;
  double statistic = 0.0;  // |metric diff| for permutation, t for paired-t
  double p_value = 1.0;
  int n_perm = 0;  // permutation test
  int df = 0;      // paired t-test
};

using MetricFn = std::function<double(const std::vector<double>&,
                                      const std::vector<int>&)>;

/// Paired model comparison: the null is built by independently swapping the
/// two models' predictions per sample. Statistic is the absolute metric
/// difference; p = (1 + #{permuted >= observed}) / (1 + n_perm).
StatTestResult permutation_test(const MetricFn& metric,
                                const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b,
                                const std::vector<int>& labels, int n_perm,
                                std::uint64_t seed);

/// Two-sided paired t-test on per-sample errors. Uses the sample variance
/// (n-1 denominator) of the differences; p from the Student-t CDF.
StatTestResult paired_t_test(const std::vector<double>& errors_a,
                             const std::vector<double>& errors_b);

/// Regularized incomplete beta function I_x(a, b), the building block of the
/// Student-t tail probability; exposed for direct verification against
/// tabulated values.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value for a t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, int df);

}  // namespace chronofuse
