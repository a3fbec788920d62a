#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chronofuse {

enum class SplitRole { kTrain, kVal, kTest };

std::string split_role_name(SplitRole r);

struct FoldSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;
};

/// Subject-level k-fold cross-validation plan. Each fold partitions all
/// subjects into train/val/test by the configured ratios; the test blocks
/// tile the cohort so every subject tests exactly once.
struct SplitPlan {
  std::vector<FoldSplit> folds;
  std::uint64_t seed = 0;

  int fold_count() const { return static_cast<int>(folds.size()); }
  const FoldSplit& fold(int f) const;
};

SplitPlan split_cross_subject(const std::vector<std::string>& subject_ids,
                              int folds, double train_ratio, double val_ratio,
                              double test_ratio, std::uint64_t seed);

inline SplitPlan split_cross_subject(const std::vector<std::string>& ids,
                                     int folds, std::uint64_t seed) {
  return split_cross_subject(ids, folds, 0.64, 0.16, 0.20, seed);
}

/// Order-independent digest of one fold-role membership; the token fitted
/// artifacts carry to prove which split they were fitted on.
std::uint64_t split_fingerprint(int fold, SplitRole role,
                                const std::vector<std::string>& ids);

}  // namespace chronofuse
