#pragma once

#include <vector>

#include "chronofuse/ecg_encoder.hpp"  // HierEmbedding
#include "chronofuse/nn.hpp"
#include "chronofuse/records.hpp"

namespace chronofuse {

/// Hourly -> 15-minute grid. Per item and grid point: linear interpolation
/// between observed neighbors on both sides, nearest-neighbor when only one
/// side has observations, zeros for an entirely unobserved item. The output
/// mask is all-true.
VitalsGrid upsample_vitals(const VitalsGrid& hourly);

struct VitalsStats {
  std::vector<std::string> items;
  std::vector<double> mean;
  std::vector<double> stddev;  // population std with floor 1e-6
  std::uint64_t fitted_on = 0;

  void verify_fingerprint(std::uint64_t expected) const;
};

/// Per-item moments over observed values (pre-upsampling) of the training
/// grids only.
VitalsStats fit_vitals_stats(const std::vector<const VitalsGrid*>& train_grids,
                             std::uint64_t fitted_on);

VitalsGrid normalize_vitals(const VitalsGrid& grid, const VitalsStats& stats);

/// Overlapping windows over a regular grid: window k covers minutes
/// [t0 + k*S, t0 + k*S + W); count = floor((T - W) / S) + 1.
std::vector<Tensor> slice_windows(const VitalsGrid& grid,
                                  const SlidingWindowConfig& cfg);

int sliding_window_count(double horizon_minutes,
                         const SlidingWindowConfig& cfg);

struct VitalsEncoderConfig {
  int n_items = 24;
  int d_attn = 4;        // per-item lifted token width
  int d_model = 16;      // micro / macro width
  int hf_channels = 8;
  int hf_kernel = 3;
  int hf_blocks = 1;
  int lf_channels = 8;
  int lf_kernel = 3;
  int lf_blocks = 2;
  double horizon_minutes = 1440.0;  // cohort-wide grid horizon
  SlidingWindowConfig window;
};

/// Per window: each timepoint's item values are lifted to d_attn tokens by a
/// learned per-item affine map, mixed by parameterless self-attention across
/// items, pooled, then the timepoint sequence runs through the HF conv stack.
/// The micro sequence runs through the LF stack for the macro vector.
class VitalsEncoder {
 public:
  VitalsEncoder(VitalsEncoderConfig cfg, std::uint64_t seed);

  /// Attention tokens for one timepoint column (one value per item).
  Var lift_timepoint(Tape& t, Var column /*[n_items]*/) const;

  Var encode_window(Tape& t, const Tensor& window /*[n_items x P]*/) const;

  struct Forward {
    Var micro;   // [n_windows x d_model]
    Var macro;   // [d_model]
    Var tokens;  // [(n_windows + 1) x d_model]
  };

  Forward forward(Tape& t, const std::vector<Tensor>& windows) const;

  HierEmbedding encode(const std::vector<Tensor>& windows) const;

  int window_count_for(double horizon_minutes) const {
    return sliding_window_count(horizon_minutes, cfg_.window);
  }

  const VitalsEncoderConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  VitalsEncoderConfig cfg_;
  ConvEncoderSpec hf_spec_;
  ConvEncoderSpec lf_spec_;
  mutable ParameterSet params_;
};

}  // namespace chronofuse
