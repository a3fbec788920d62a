#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chronofuse/trainer.hpp"

namespace chronofuse {

/// Snapshot baseline: the most recent observed value of every item (0 when
/// an item was never observed), optionally concatenated with the static
/// vector, through a small MLP.
struct StaticLatestConfig {
  std::vector<std::string> items;  // vocabulary order
  bool include_static = false;
  int static_dim = 0;
  int hidden = 32;
  int n_outputs = 2;
  TaskKind task = TaskKind::kBinary;
};

class StaticLatestModel final : public TrainableModel {
 public:
  StaticLatestModel(StaticLatestConfig cfg, std::uint64_t seed);

  Var predict(Tape& t, const SubjectData& s) override;
  std::vector<ParameterSet*> param_sets() override;

  /// Latest observed value per item (ties broken by scan order; missing
  /// items give 0). Exposed for direct verification.
  static std::vector<double> latest_per_item(
      const SubjectData& s, const std::vector<std::string>& items);

 private:
  StaticLatestConfig cfg_;
  std::vector<int> dims_;
  ParameterSet params_;
};

enum class RnnCell { kLstm, kGru };
enum class FillKind { kForward, kZero };

std::string rnn_cell_name(RnnCell c);
std::string fill_kind_name(FillKind f);

/// Irregular labs resampled onto uniform windows (per-window mean), then
/// imputed and run through a recurrent encoder with a linear head.
struct ImputedRnnConfig {
  std::vector<std::string> items;
  RnnCell cell = RnnCell::kLstm;
  FillKind fill = FillKind::kForward;
  int hidden = 16;
  int n_outputs = 2;
  TaskKind task = TaskKind::kBinary;
  double window_minutes = 60.0;
  double horizon_minutes = 1440.0;
};

/// Uniformly binned series with an observed mask, before imputation.
struct BinnedSeries {
  Tensor values;  // [n_windows x n_items]
  std::vector<std::vector<std::uint8_t>> observed;  // [window][item]
};

/// Per-window mean of each item's observations inside
/// [k*window, (k+1)*window); unobserved cells are 0 with mask 0.
BinnedSeries bin_uniform_windows(const SubjectData& s,
                                 const std::vector<std::string>& items,
                                 double window_minutes,
                                 double horizon_minutes);

/// kForward: carry the last observed value forward; windows before the
/// first observation take the item's fill value (the training median).
/// kZero: every unobserved cell becomes 0. Marks everything observed.
void impute_series(BinnedSeries& series, FillKind fill,
                   const std::vector<double>& fill_values);

class ImputedRnnModel final : public TrainableModel {
 public:
  ImputedRnnModel(ImputedRnnConfig cfg, std::uint64_t seed);

  /// Fits the per-item fill medians on training subjects only. Items never
  /// observed in training fall back to 0.
  void fit_fill_values(const std::vector<const SubjectData*>& train,
                       std::uint64_t fingerprint);

  Tensor imputed_matrix(const SubjectData& s) const;

  Var predict(Tape& t, const SubjectData& s) override;
  std::vector<ParameterSet*> param_sets() override;

  const std::vector<double>& fill_values() const { return fill_values_; }
  const ImputedRnnConfig& config() const { return cfg_; }

 private:
  ImputedRnnConfig cfg_;
  std::vector<double> fill_values_;
  bool fitted_ = false;
  std::uint64_t fitted_on_ = 0;
  ParameterSet params_;
};

}  // namespace chronofuse
