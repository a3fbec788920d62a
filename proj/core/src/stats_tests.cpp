#include "chronofuse/stats_tests.hpp"

#include <cmath>
#include <limits>

#include "chronofuse/errors.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

StatTestResult permutation_test(const MetricFn& metric,
                                const std::vector<double>& scores_a,
                                const std::vector<double>& scores_b,
                                const std::vector<int>& labels, int n_perm,
                                std::uint64_t seed) {
  if (!metric) throw ContractError("permutation test needs a metric");
  if (scores_a.size() != scores_b.size() || scores_a.size() != labels.size())
    throw ContractError("paired predictions must align with the labels");
  if (scores_a.empty()) throw ContractError("permutation test on no samples");
  if (n_perm < 100)
    throw ConfigError("n_perm " + std::to_string(n_perm) +
                      " is below the minimum of 100");

  const double observed =
      std::fabs(metric(scores_a, labels) - metric(scores_b, labels));

  Rng rng(hash_combine(seed, hash_str("permutation")));
  const std::size_t n = scores_a.size();
  std::vector<double> pa(n), pb(n);
  int at_least = 0;
  for (int p = 0; p < n_perm; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.bernoulli(0.5)) {
        pa[i] = scores_b[i];
        pb[i] = scores_a[i];
      } else {
        pa[i] = scores_a[i];
        pb[i] = scores_b[i];
      }
    }
    const double diff = std::fabs(metric(pa, labels) - metric(pb, labels));
    at_least += (diff >= observed);
  }

  StatTestResult r;
  r.kind = StatTestKind::kPermutation;
  r.statistic = observed;
  r.n_perm = n_perm;
  r.p_value = (1.0 + at_least) / (1.0 + n_perm);
  return r;
}

namespace {

/// Continued fraction for the incomplete beta function (modified Lentz).
double beta_cf(double a, double b, double x) {
  constexpr double kEps = 1e-14;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 300; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0))
    throw ContractError("incomplete beta needs positive shape parameters");
  if (x < 0.0 || x > 1.0)
    throw ContractError("incomplete beta argument outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) -
                          std::lgamma(b) + a * std::log(x) +
                          b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int df) {
  if (df < 1) throw ContractError("degrees of freedom must be >= 1");
  if (!std::isfinite(t)) throw NumericError("non-finite t statistic");
  const double d = static_cast<double>(df);
  const double x = d / (d + t * t);
  return regularized_incomplete_beta(d / 2.0, 0.5, x);
}

StatTestResult paired_t_test(const std::vector<double>& errors_a,
                             const std::vector<double>& errors_b) {
  if (errors_a.size() != errors_b.size())
    throw ContractError("paired errors differ in length");
  const std::size_t n = errors_a.size();
  if (n < 2) throw ContractError("paired t-test needs >= 2 samples");

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += errors_a[i] - errors_b[i];
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = errors_a[i] - errors_b[i] - mean;
    var += d * d;
  }
  var /= static_cast<double>(n - 1);
  if (var <= 0.0)
    throw DegenerateTestError("paired differences have zero variance");

  StatTestResult r;
  r.kind = StatTestKind::kPairedT;
  r.statistic = mean / std::sqrt(var / static_cast<double>(n));
  r.df = static_cast<int>(n) - 1;
  r.p_value = student_t_two_sided_p(r.statistic, r.df);
  return r;
}

}  // namespace chronofuse
