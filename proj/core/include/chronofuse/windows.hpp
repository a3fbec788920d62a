#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace chronofuse {

enum class AnchorKind { kEcgRelative, kAdmissionRelative };

std::string anchor_kind_name(AnchorKind k);
AnchorKind anchor_kind_from_name(const std::string& name);

/// Non-uniform partition of relative time by empirical percentiles of the
/// training-split delta-t distribution.
///
/// admission_relative: dt = t_event - t_in (larger dt = later).
/// ecg_relative:       dt = t_anchor - t_event (larger dt = older).
struct TimeWindowScheme {
  AnchorKind anchor = AnchorKind::kAdmissionRelative;
  std::vector<double> percentiles;  // e.g. {0,10,...,100}
  std::vector<double> boundaries;   // same length, nondecreasing
  std::uint64_t fitted_on = 0;

  int window_count() const { return static_cast<int>(percentiles.size()) - 1; }

  /// Raw window index by dt: window k covers [b_k, b_{k+1}), with the first
  /// and last boundary treated as -inf/+inf so every dt maps somewhere.
  int raw_window_of(double dt) const;

  /// Chronological position (0 = oldest) of a raw window index. For
  /// ecg_relative schemes large dt means old, so the order is reversed.
  int chronological_of(int raw_window) const;

  int window_of(double dt) const { return chronological_of(raw_window_of(dt)); }

  double dt_of(double event_timestamp, double anchor_timestamp) const;

  void verify_fingerprint(std::uint64_t expected) const;
};

/// Fits boundaries at the given percentiles of the training dt sample.
TimeWindowScheme build_time_windows(std::vector<double> training_dts,
                                    const std::vector<double>& percentiles,
                                    AnchorKind anchor, std::uint64_t fitted_on);

/// Task presets: the coarse 7-point list for ecg-anchored encoding and the
/// decile list for admission-anchored encoding.
std::vector<double> ecg_anchor_percentiles();
std::vector<double> decile_percentiles();

void save_scheme(const TimeWindowScheme& scheme, const std::string& path);
TimeWindowScheme load_scheme(const std::string& path);

}  // namespace chronofuse
