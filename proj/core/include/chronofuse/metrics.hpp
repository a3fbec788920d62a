#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chronofuse/records.hpp"

namespace chronofuse {

/// Probability that a positive out-ranks a negative, ties counted half.
/// Computed from exact integer pair counts, so it matches a brute-force
/// pair enumeration bit-for-bit. Labels are 0/1; both classes must be
/// present.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Average precision: the area under the precision-recall step curve,
/// accumulated over distinct score thresholds in descending order (tied
/// scores form one threshold group).
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

/// One-vs-rest per class, averaged uniformly over the classes that appear
/// in `labels`. `scores[i]` holds one score per class.
double auroc_macro(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& labels, int n_classes);
double auprc_macro(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& labels, int n_classes);

/// Mean absolute error and mean squared error.
std::pair<double, double> mae_mse(const std::vector<double>& preds,
                                  const std::vector<double>& targets);

/// Curve points for external plotting, swept over distinct score
/// thresholds in descending order (plus the all-negative origin for ROC).
struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};
struct PrPoint {
  double recall = 0.0;
  double precision = 1.0;
};
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);
std::vector<PrPoint> pr_points(const std::vector<double>& scores,
                               const std::vector<int>& labels);

/// Item x interval table of missing ratios over exponentially spaced time
/// bins: edge_k = horizon * (2^k - 1) / (2^n - 1), so consecutive bin
/// widths double. ratio[i][k] = 1 - (subjects with an observation of item
/// i inside bin k) / (total subjects).
struct MissingnessProfile {
  std::vector<std::string> items;
  std::vector<double> edges;                // n_intervals + 1 ascending
  std::vector<std::vector<double>> ratio;   // [item][interval]
};

MissingnessProfile missingness_profile(
    const std::vector<const SubjectData*>& subjects,
    const std::vector<std::string>& items, int n_intervals,
    double horizon_minutes);

}  // namespace chronofuse
