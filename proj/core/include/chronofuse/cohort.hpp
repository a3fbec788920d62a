#pragma once

#include <cstdint>
#include <vector>

#include "chronofuse/records.hpp"

namespace chronofuse {

/// Knobs of the synthetic cohort generator. Labels are drawn from a noisy
/// score over four per-subject latents (static, lab trend, vitals level,
/// signal morphology) plus a `coupling`-weighted product of the lab and
/// signal latents, so only a model that sees both modalities can recover
/// the interaction term.
struct CohortConfig {
  int n_subjects = 1000;
  int n_static = 8;
  int n_lab_items = 12;
  int n_vital_items = 24;
  int signal_leads = 12;
  int signal_samples = 625;
  int text_vocab = 143;
  int n_ecg_features = 4;
  double horizon_minutes = 1440.0;

  TaskKind task = TaskKind::kBinary;
  std::vector<double> class_priors;  // empty -> per-task default

  double mnar_intensity = 1.0;       // lab sampling rate ~ exp(this * z(t))
  double lab_rate_per_hour = 0.15;   // per item, at severity 0
  double coupling = 1.0;             // weight of the cross-modal product
  double ecg_missing_fraction = 0.467;

  double w_static = 1.0;
  double w_lab = 1.0;
  double w_vitals = 1.0;
  double w_ecg = 1.0;
  double noise = 1.0;  // scale of the logistic noise in the label score

  std::uint64_t seed = 0;

  /// Throws ConfigError on nonpositive counts, priors that do not sum to 1,
  /// or fractions outside [0,1].
  void validate() const;

  /// Priors actually used: the configured ones, or the per-task default
  /// (4-class imbalanced ratios; their binary collapse; none for
  /// regression).
  std::vector<double> effective_priors() const;

  static std::vector<double> default_priors_multiclass4();
  static std::vector<double> default_priors_binary();

  bool operator==(const CohortConfig&) const = default;
};

struct CohortDataset {
  int schema_version = 1;
  CohortConfig config;
  std::vector<SubjectData> subjects;

  bool operator==(const CohortDataset&) const = default;
};

/// Deterministic given config.seed; each subject is generated from its own
/// derived random stream, so generation order (or parallel generation)
/// cannot change the output.
CohortDataset generate_cohort(const CohortConfig& cfg);

/// Sorted lab / vitals item names used by the generator.
std::vector<std::string> lab_item_names(int n);
std::vector<std::string> vital_item_names(int n);

}  // namespace chronofuse
