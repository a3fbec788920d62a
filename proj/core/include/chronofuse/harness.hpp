#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chronofuse/baselines.hpp"
#include "chronofuse/cohort.hpp"
#include "chronofuse/fusion.hpp"
#include "chronofuse/gradcheck.hpp"
#include "chronofuse/metrics.hpp"
#include "chronofuse/splits.hpp"
#include "chronofuse/trainer.hpp"

namespace chronofuse {

/// Everything needed to run one cross-validated experiment end to end.
struct HarnessConfig {
  bool use_static = true;
  bool use_labs = true;
  bool use_ecg = true;
  bool use_vitals = false;  // the heaviest encoder; off by default

  bool no_pretrain = false;
  bool no_biattention = false;
  bool no_shared = false;

  int folds = 5;
  double train_ratio = 0.64;
  double val_ratio = 0.16;
  double test_ratio = 0.20;

  int lab_bins = 16;
  AnchorKind lab_anchor = AnchorKind::kAdmissionRelative;
  std::vector<double> lab_percentiles = decile_percentiles();
  std::vector<double> ecg_percentiles = ecg_anchor_percentiles();
  SlidingWindowConfig vitals_window;

  int sparse_embed = 16;
  int sparse_hidden = 16;
  int d_shared = 16;
  int decoder_hidden = 16;
  int pretrain_head_hidden = 16;

  int max_epochs = 10;
  int batch_size = 16;
  double lr = 1e-3;
  int patience = 2;
  int pretrain_epochs = 4;

  int jobs = 1;  // folds run in this many worker threads
  std::uint64_t seed = 0;
};

struct FoldMetrics {
  int fold = 0;
  double auroc = 0.0;
  double auprc = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  TrainResult train;
};

struct EvalReport {
  std::string variant = "full";
  TaskKind task = TaskKind::kBinary;
  std::vector<FoldMetrics> folds;
  double mean_auroc = 0.0;
  double mean_auprc = 0.0;
  double mean_mae = 0.0;
  double mean_mse = 0.0;
};

/// Fits every train-only preprocessing artifact of one fold (binners,
/// window schemes, vitals stats) and stamps them with the fold's training
/// fingerprint.
std::shared_ptr<FoldContext> fit_fold_context(
    const CohortDataset& ds, const std::vector<std::string>& train_ids,
    int fold, const HarnessConfig& cfg);

/// Modality stack for the dataset under the config's use_* switches
/// (ids "static", "labs", "ecg", "vitals").
std::vector<ModalityConfig> modality_configs(const CohortDataset& ds,
                                             const HarnessConfig& cfg);

/// The subject-holdout plan every run derived from this config shares.
SplitPlan make_split_plan(const CohortDataset& ds, const HarnessConfig& cfg);

/// Maps split member ids back to dataset rows (unknown id -> SplitError).
std::vector<const SubjectData*> resolve_subjects(
    const CohortDataset& ds, const std::vector<std::string>& ids);

/// Output head width per task (4 / 2 / 1).
int outputs_for_task(TaskKind task);

/// Root seed of the fold's model; per-stage seeds derive from it.
std::uint64_t model_seed(const HarnessConfig& cfg, int fold);
std::uint64_t stage_seed(std::uint64_t mseed, const std::string& stage);

/// Trains each modality encoder in place against the task labels through a
/// small throwaway head, restricted to subjects where the modality is
/// present (none present -> PretrainError).
void pretrain_encoders(FusionModel& model,
                       const std::vector<const SubjectData*>& train,
                       const std::vector<const SubjectData*>& val,
                       const HarnessConfig& cfg, int fold);

/// Test-set metrics of a trained model (fold and train fields left empty).
FoldMetrics evaluate_model(TrainableModel& model,
                           const std::vector<const SubjectData*>& test,
                           TaskKind task, int n_outputs);

/// Cross-validated train + eval of the full fusion model.
EvalReport run_eval(const CohortDataset& ds, const HarnessConfig& cfg);

/// Applies a named variant to a base config: "full", "no_pretrain",
/// "no_biattention", "no_shared", "wo_<modality>", "only_<modality>".
HarnessConfig apply_variant(const HarnessConfig& base,
                            const std::string& variant);

/// Runs every requested variant over one shared split plan and seed.
std::vector<EvalReport> run_ablation(const CohortDataset& ds,
                                     const HarnessConfig& base,
                                     const std::vector<std::string>& variants);

/// Baseline runs sharing the same split machinery.
EvalReport run_static_latest_baseline(const CohortDataset& ds,
                                      const HarnessConfig& cfg);
EvalReport run_imputed_rnn_baseline(const CohortDataset& ds,
                                    const HarnessConfig& cfg, RnnCell cell,
                                    FillKind fill);

/// Deterministic report renderings (no wall-clock content).
std::string report_csv(const std::vector<EvalReport>& reports);
std::string report_json(const std::vector<EvalReport>& reports,
                        const std::string& dataset_digest,
                        std::uint64_t seed);
std::string loss_curves_csv(const std::vector<EvalReport>& reports);
std::string missingness_csv(const MissingnessProfile& profile);

/// Gradient verification of every layer primitive plus three end-to-end
/// encoder compositions.
struct GradSuiteCase {
  std::string name;
  GradCheckReport report;
};
std::vector<GradSuiteCase> run_gradient_suite(std::uint64_t seed);

}  // namespace chronofuse
