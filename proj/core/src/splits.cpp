#include "chronofuse/splits.hpp"

#include <algorithm>
#include <cmath>

#include "chronofuse/errors.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

std::string split_role_name(SplitRole r) {
  switch (r) {
    case SplitRole::kTrain: return "train";
    case SplitRole::kVal: return "val";
    case SplitRole::kTest: return "test";
  }
  throw ContractError("unknown split role");
}

const FoldSplit& SplitPlan::fold(int f) const {
  if (f < 0 || f >= fold_count())
    throw IndexError("fold " + std::to_string(f) + " outside [0," +
                     std::to_string(fold_count()) + ")");
  return folds[static_cast<std::size_t>(f)];
}

SplitPlan split_cross_subject(const std::vector<std::string>& subject_ids,
                              int folds, double train_ratio, double val_ratio,
                              double test_ratio, std::uint64_t seed) {
  const int n = static_cast<int>(subject_ids.size());
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (n < folds)
    throw SplitError("cannot split " + std::to_string(n) + " subjects into " +
                     std::to_string(folds) + " folds");
  const double ratio_sum = train_ratio + val_ratio + test_ratio;
  if (std::fabs(ratio_sum - 1.0) > 1e-9)
    throw ConfigError("split ratios must sum to 1");
  if (train_ratio <= 0 || val_ratio <= 0 || test_ratio <= 0)
    throw ConfigError("split ratios must be positive");

  std::vector<std::string> ids = subject_ids;
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw SplitError("duplicate subject id in split input");
  Rng rng(hash_combine(seed, hash_str("split")));
  rng.shuffle(ids);

  // Contiguous blocks of the shuffled order become the per-fold test sets;
  // block f has the f-th fair share of n, so the blocks tile the cohort.
  std::vector<int> block_start(static_cast<std::size_t>(folds) + 1);
  for (int f = 0; f <= folds; ++f)
    block_start[static_cast<std::size_t>(f)] =
        static_cast<int>((static_cast<long long>(n) * f) / folds);

  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    FoldSplit& fs = plan.folds[static_cast<std::size_t>(f)];
    const int t0 = block_start[static_cast<std::size_t>(f)];
    const int t1 = block_start[static_cast<std::size_t>(f) + 1];
    std::vector<std::string> rest;
    rest.reserve(static_cast<std::size_t>(n - (t1 - t0)));
    for (int i = 0; i < n; ++i) {
      if (i >= t0 && i < t1)
        fs.test_ids.push_back(ids[static_cast<std::size_t>(i)]);
      else
        rest.push_back(ids[static_cast<std::size_t>(i)]);
    }
    // Split the remainder into train/val in proportion; reshuffle per fold
    // so the val block is not systematically adjacent to the test block.
    Rng fold_rng = rng.child(static_cast<std::uint64_t>(f) + 1);
    fold_rng.shuffle(rest);
    const double tv = train_ratio + val_ratio;
    const int n_train = static_cast<int>(std::llround(
        static_cast<double>(rest.size()) * train_ratio / tv));
    for (std::size_t i = 0; i < rest.size(); ++i) {
      if (static_cast<int>(i) < n_train)
        fs.train_ids.push_back(rest[i]);
      else
        fs.val_ids.push_back(rest[i]);
    }
    if (fs.train_ids.empty() || fs.val_ids.empty() || fs.test_ids.empty())
      throw SplitError("fold " + std::to_string(f) +
                       " has an empty role; need more subjects");
  }
  return plan;
}

std::uint64_t split_fingerprint(int fold, SplitRole role,
                                const std::vector<std::string>& ids) {
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  std::uint64_t h = hash_combine(0x5350'4c49'5421'0001ull,
                                 static_cast<std::uint64_t>(fold));
  h = hash_combine(h, static_cast<std::uint64_t>(role));
  for (const std::string& id : sorted) h = hash_combine(h, hash_str(id));
  return h;
}

}  // namespace chronofuse
