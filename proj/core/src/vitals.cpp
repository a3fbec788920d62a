#include "chronofuse/vitals.hpp"

#include <algorithm>
#include <cmath>

#include "chronofuse/errors.hpp"

namespace chronofuse {

VitalsGrid upsample_vitals(const VitalsGrid& hourly) {
  if (hourly.step_minute != 60.0)
    throw ContractError("upsample_vitals expects an hourly grid, step is " +
                        std::to_string(hourly.step_minute));
  const int n_items = hourly.n_items();
  const int n_hours = hourly.n_points();
  const int n_out = n_hours * 4;
  VitalsGrid out;
  out.items = hourly.items;
  out.start_minute = hourly.start_minute;
  out.step_minute = 15.0;
  out.values.assign(static_cast<std::size_t>(n_items),
                    std::vector<double>(static_cast<std::size_t>(n_out), 0.0));
  out.mask.assign(static_cast<std::size_t>(n_items),
                  std::vector<std::uint8_t>(static_cast<std::size_t>(n_out), 1));
  for (int i = 0; i < n_items; ++i) {
    std::vector<int> obs_hours;
    for (int h = 0; h < n_hours; ++h)
      if (hourly.mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)])
        obs_hours.push_back(h);
    std::vector<double>& row = out.values[static_cast<std::size_t>(i)];
    if (obs_hours.empty()) continue;  // entirely unobserved -> zeros
    const std::vector<double>& src = hourly.values[static_cast<std::size_t>(i)];
    for (int j = 0; j < n_out; ++j) {
      const double t = 15.0 * j;  // minutes past the grid start
      // First observed hour with timestamp >= t.
      const double th = t / 60.0;
      auto next_it = std::lower_bound(obs_hours.begin(), obs_hours.end(), th,
                                      [](int h, double x) { return h < x; });
      const bool has_next = next_it != obs_hours.end();
      const bool has_prev = next_it != obs_hours.begin();
      if (has_next && 60.0 * (*next_it) == t) {
        row[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(*next_it)];
      } else if (has_next && has_prev) {
        const int h0 = *(next_it - 1);
        const int h1 = *next_it;
        const double v0 = src[static_cast<std::size_t>(h0)];
        const double v1 = src[static_cast<std::size_t>(h1)];
        const double frac = (t - 60.0 * h0) / (60.0 * (h1 - h0));
        row[static_cast<std::size_t>(j)] = v0 + frac * (v1 - v0);
      } else if (has_prev) {
        row[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(*(next_it - 1))];
      } else {
        row[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(*next_it)];
      }
    }
  }
  return out;
}

void VitalsStats::verify_fingerprint(std::uint64_t expected) const {
  if (fitted_on != expected)
    throw LeakError("vitals stats fitted on split " + std::to_string(fitted_on) +
                    " used with split " + std::to_string(expected));
}

VitalsStats fit_vitals_stats(const std::vector<const VitalsGrid*>& train_grids,
                             std::uint64_t fitted_on) {
  if (train_grids.empty())
    throw FitError("no training grids for vitals stats");
  const VitalsGrid& first = *train_grids.front();
  VitalsStats stats;
  stats.items = first.items;
  stats.fitted_on = fitted_on;
  const int n_items = first.n_items();
  stats.mean.assign(static_cast<std::size_t>(n_items), 0.0);
  stats.stddev.assign(static_cast<std::size_t>(n_items), 1e-6);
  for (int i = 0; i < n_items; ++i) {
    double sum = 0.0, sumsq = 0.0;
    long long n = 0;
    for (const VitalsGrid* g : train_grids) {
      if (g->items != stats.items)
        throw ContractError("vitals grids disagree on item lists");
      const auto& vals = g->values[static_cast<std::size_t>(i)];
      const auto& mask = g->mask[static_cast<std::size_t>(i)];
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (!mask[j]) continue;
        sum += vals[j];
        sumsq += vals[j] * vals[j];
        ++n;
      }
    }
    if (n == 0) continue;  // never observed: mean 0, floored std
    const double mean = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, sumsq / static_cast<double>(n) - mean * mean);
    stats.mean[static_cast<std::size_t>(i)] = mean;
    stats.stddev[static_cast<std::size_t>(i)] = std::max(1e-6, std::sqrt(var));
  }
  return stats;
}

VitalsGrid normalize_vitals(const VitalsGrid& grid, const VitalsStats& stats) {
  if (grid.items != stats.items)
    throw ConfigError("vitals stats do not cover this grid's items");
  VitalsGrid out = grid;
  for (int i = 0; i < grid.n_items(); ++i) {
    const double mu = stats.mean[static_cast<std::size_t>(i)];
    const double sigma = stats.stddev[static_cast<std::size_t>(i)];
    for (double& v : out.values[static_cast<std::size_t>(i)])
      v = (v - mu) / sigma;
  }
  return out;
}

int sliding_window_count(double horizon_minutes,
                         const SlidingWindowConfig& cfg) {
  if (cfg.window_minutes <= 0 || cfg.step_minutes <= 0)
    throw ConfigError("window and step must be positive");
  if (cfg.window_minutes % 15 != 0)
    throw ConfigError("window length must be a multiple of 15 minutes");
  if (horizon_minutes < cfg.window_minutes)
    throw ConfigError("horizon " + std::to_string(horizon_minutes) +
                      " min is shorter than the window " +
                      std::to_string(cfg.window_minutes) + " min");
  return static_cast<int>(
             std::floor((horizon_minutes - cfg.window_minutes) /
                        static_cast<double>(cfg.step_minutes))) +
         1;
}

std::vector<Tensor> slice_windows(const VitalsGrid& grid,
                                  const SlidingWindowConfig& cfg) {
  if (grid.step_minute != 15.0)
    throw ContractError("slice_windows expects the 15-minute grid");
  if (cfg.step_minutes % 15 != 0)
    throw ConfigError("step must be a multiple of 15 minutes");
  const int n_items = grid.n_items();
  const int n_points = grid.n_points();
  const double horizon = grid.horizon_minutes();
  const int count = sliding_window_count(horizon, cfg);
  const int per_window = cfg.window_minutes / 15;
  const int stride_points = cfg.step_minutes / 15;
  std::vector<Tensor> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const int start = k * stride_points;
    if (start + per_window > n_points)
      throw ContractError("window overruns the grid");
    Tensor w({n_items, per_window});
    for (int i = 0; i < n_items; ++i)
      for (int p = 0; p < per_window; ++p)
        w.data[static_cast<std::size_t>(i) * per_window + p] =
            grid.values[static_cast<std::size_t>(i)]
                       [static_cast<std::size_t>(start + p)];
    out.push_back(std::move(w));
  }
  return out;
}

VitalsEncoder::VitalsEncoder(VitalsEncoderConfig cfg, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
  if (cfg_.n_items < 1 || cfg_.d_attn < 1 || cfg_.d_model < 1)
    throw ConfigError("vitals encoder config has nonpositive extents");
  params_.add("lift.w", {cfg_.n_items, cfg_.d_attn}, Init::kKaimingUniform);
  params_.add("lift.b", {cfg_.n_items, cfg_.d_attn}, Init::kZero);
  hf_spec_.in_ch = cfg_.d_attn;
  hf_spec_.stem_ch = cfg_.hf_channels;
  hf_spec_.stem_kernel = cfg_.hf_kernel;
  hf_spec_.stem_stride = 1;
  hf_spec_.blocks = cfg_.hf_blocks;
  hf_spec_.block_kernel = cfg_.hf_kernel;
  hf_spec_.block_stride = 1;
  hf_spec_.out_dim = cfg_.d_model;
  declare_conv_encoder(params_, "hf", hf_spec_);
  lf_spec_.in_ch = cfg_.d_model;
  lf_spec_.stem_ch = cfg_.lf_channels;
  lf_spec_.stem_kernel = cfg_.lf_kernel;
  lf_spec_.stem_stride = 1;
  lf_spec_.blocks = cfg_.lf_blocks;
  lf_spec_.block_kernel = cfg_.lf_kernel;
  lf_spec_.block_stride = 1;
  lf_spec_.out_dim = cfg_.d_model;
  declare_conv_encoder(params_, "lf", lf_spec_);
}

Var VitalsEncoder::lift_timepoint(Tape& t, Var column) const {
  const Tensor& tc = t.val(column);
  if (tc.rank() != 1 || tc.dim(0) != cfg_.n_items)
    throw DimensionError("timepoint column " + tc.shape_str() +
                         " does not match " + std::to_string(cfg_.n_items) +
                         " items");
  Var w = t.param(params_.get("lift.w"));
  Var b = t.param(params_.get("lift.b"));
  return t.add(t.mul_colvec(w, column), b);
}

Var VitalsEncoder::encode_window(Tape& t, const Tensor& window) const {
  if (window.rank() != 2 || window.dim(0) != cfg_.n_items)
    throw DimensionError("window shape " + window.shape_str() +
                         " does not match " + std::to_string(cfg_.n_items) +
                         " items");
  const int per_window = window.dim(1);
  if (per_window < 1) throw ContractError("empty window");
  Var wv = t.value(window);
  std::vector<Var> step_rows(static_cast<std::size_t>(per_window));
  for (int p = 0; p < per_window; ++p) {
    Var column = t.reshape(t.slice_cols(wv, p, p + 1), {cfg_.n_items});
    Var tokens = lift_timepoint(t, column);
    Var mixed = t.attention(tokens, tokens, tokens);
    step_rows[static_cast<std::size_t>(p)] = t.mean_rows(mixed);
  }
  Var seq = t.transpose(t.stack_rows(step_rows));  // [d_attn x P]
  return conv_encoder_forward(t, params_, "hf", hf_spec_, seq);
}

VitalsEncoder::Forward VitalsEncoder::forward(
    Tape& t, const std::vector<Tensor>& windows) const {
  if (windows.empty()) throw ContractError("vitals encoder needs >= 1 window");
  std::vector<Var> micro_rows;
  micro_rows.reserve(windows.size());
  for (const Tensor& w : windows) micro_rows.push_back(encode_window(t, w));
  Forward f;
  f.micro = t.stack_rows(micro_rows);
  f.macro = conv_encoder_forward(t, params_, "lf", lf_spec_, t.transpose(f.micro));
  std::vector<Var> token_rows = micro_rows;
  token_rows.push_back(f.macro);
  f.tokens = t.stack_rows(token_rows);
  return f;
}

HierEmbedding VitalsEncoder::encode(const std::vector<Tensor>& windows) const {
  Tape t;
  Forward f = forward(t, windows);
  HierEmbedding out;
  out.micro = t.val(f.micro);
  out.macro = t.val(f.macro);
  return out;
}

}  // namespace chronofuse
