#include "chronofuse/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "chronofuse/errors.hpp"
#include "chronofuse/nn.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

std::string rnn_cell_name(RnnCell c) {
  return c == RnnCell::kLstm ? "lstm" : "gru";
}

std::string fill_kind_name(FillKind f) {
  return f == FillKind::kForward ? "forward" : "zero";
}

StaticLatestModel::StaticLatestModel(StaticLatestConfig cfg,
                                     std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(seed) {
  if (cfg_.items.empty() && !cfg_.include_static)
    throw ConfigError("snapshot baseline needs items or static features");
  if (cfg_.include_static && cfg_.static_dim < 1)
    throw ConfigError("include_static requires static_dim");
  const int d_in = static_cast<int>(cfg_.items.size()) +
                   (cfg_.include_static ? cfg_.static_dim : 0);
  dims_ = {d_in, cfg_.hidden, cfg_.n_outputs};
  declare_mlp(params_, "mlp", dims_);
}

std::vector<double> StaticLatestModel::latest_per_item(
    const SubjectData& s, const std::vector<std::string>& items) {
  std::vector<double> out(items.size(), 0.0);
  std::vector<double> best_t(items.size(), 0.0);
  std::vector<bool> seen(items.size(), false);
  for (const TimedObservation& o : s.labs) {
    if (o.categorical) continue;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (o.item_id != items[i]) continue;
      if (!seen[i] || o.timestamp >= best_t[i]) {
        seen[i] = true;
        best_t[i] = o.timestamp;
        out[i] = o.value;
      }
      break;
    }
  }
  return out;
}

Var StaticLatestModel::predict(Tape& t, const SubjectData& s) {
  std::vector<double> in = latest_per_item(s, cfg_.items);
  if (cfg_.include_static) {
    if (static_cast<int>(s.static_features.size()) != cfg_.static_dim)
      throw DimensionError("static width " +
                           std::to_string(s.static_features.size()) +
                           " does not match configured " +
                           std::to_string(cfg_.static_dim));
    in.insert(in.end(), s.static_features.begin(), s.static_features.end());
  }
  Tensor x({static_cast<int>(in.size())});
  x.data = in;
  x.check_finite("snapshot baseline input");
  Var out = mlp_forward(t, params_, "mlp", dims_, t.value(std::move(x)));
  if (cfg_.task == TaskKind::kRegression) return out;
  return t.log_softmax_last(out);
}

std::vector<ParameterSet*> StaticLatestModel::param_sets() {
  return {&params_};
}

BinnedSeries bin_uniform_windows(const SubjectData& s,
                                 const std::vector<std::string>& items,
                                 double window_minutes,
                                 double horizon_minutes) {
  if (items.empty()) throw ConfigError("binning needs >= 1 item");
  if (!(window_minutes > 0.0) || !(horizon_minutes >= window_minutes))
    throw ConfigError("need 0 < window <= horizon");
  const int n_windows =
      static_cast<int>(std::floor(horizon_minutes / window_minutes));
  const int n_items = static_cast<int>(items.size());

  BinnedSeries out;
  out.values = Tensor::zeros({n_windows, n_items});
  out.observed.assign(static_cast<std::size_t>(n_windows),
                      std::vector<std::uint8_t>(items.size(), 0));
  std::vector<std::vector<double>> sum(
      static_cast<std::size_t>(n_windows),
      std::vector<double>(items.size(), 0.0));
  std::vector<std::vector<int>> cnt(static_cast<std::size_t>(n_windows),
                                    std::vector<int>(items.size(), 0));
  for (const TimedObservation& o : s.labs) {
    if (o.categorical) continue;
    if (o.timestamp < 0.0 || o.timestamp >= horizon_minutes) continue;
    const auto it = std::find(items.begin(), items.end(), o.item_id);
    if (it == items.end()) continue;
    const std::size_t i = static_cast<std::size_t>(it - items.begin());
    const int w = std::min(
        n_windows - 1,
        static_cast<int>(std::floor(o.timestamp / window_minutes)));
    sum[static_cast<std::size_t>(w)][i] += o.value;
    cnt[static_cast<std::size_t>(w)][i] += 1;
  }
  for (int w = 0; w < n_windows; ++w)
    for (int i = 0; i < n_items; ++i)
      if (cnt[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] > 0) {
        out.values.at(w, i) =
            sum[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)] /
            cnt[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)];
        out.observed[static_cast<std::size_t>(w)]
                    [static_cast<std::size_t>(i)] = 1;
      }
  return out;
}

void impute_series(BinnedSeries& series, FillKind fill,
                   const std::vector<double>& fill_values) {
  const int n_windows = series.values.dim(0);
  const int n_items = series.values.dim(1);
  if (fill == FillKind::kForward &&
      static_cast<int>(fill_values.size()) != n_items)
    throw ContractError("fill values do not cover every item");
  for (int i = 0; i < n_items; ++i) {
    bool have = false;
    double carry = 0.0;
    for (int w = 0; w < n_windows; ++w) {
      if (series.observed[static_cast<std::size_t>(w)]
                         [static_cast<std::size_t>(i)]) {
        carry = series.values.at(w, i);
        have = true;
        continue;
      }
      if (fill == FillKind::kZero) {
        series.values.at(w, i) = 0.0;
      } else {
        series.values.at(w, i) =
            have ? carry : fill_values[static_cast<std::size_t>(i)];
      }
      series.observed[static_cast<std::size_t>(w)]
                     [static_cast<std::size_t>(i)] = 1;
    }
  }
}

ImputedRnnModel::ImputedRnnModel(ImputedRnnConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), params_(seed) {
  if (cfg_.items.empty()) throw ConfigError("recurrent baseline needs items");
  const int d_in = static_cast<int>(cfg_.items.size());
  if (cfg_.cell == RnnCell::kLstm)
    declare_lstm(params_, "rnn", d_in, cfg_.hidden);
  else
    declare_gru(params_, "rnn", d_in, cfg_.hidden);
  declare_linear(params_, "head", cfg_.hidden, cfg_.n_outputs);
}

void ImputedRnnModel::fit_fill_values(
    const std::vector<const SubjectData*>& train, std::uint64_t fingerprint) {
  if (train.empty()) throw FitError("no training subjects for fill medians");
  fill_values_.assign(cfg_.items.size(), 0.0);
  for (std::size_t i = 0; i < cfg_.items.size(); ++i) {
    std::vector<double> vals;
    for (const SubjectData* s : train)
      for (const TimedObservation& o : s->labs)
        if (!o.categorical && o.item_id == cfg_.items[i])
          vals.push_back(o.value);
    if (vals.empty()) continue;  // median fallback for unseen items: 0
    std::sort(vals.begin(), vals.end());
    const std::size_t n = vals.size();
    fill_values_[i] = n % 2 == 1
                          ? vals[n / 2]
                          : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
  }
  fitted_ = true;
  fitted_on_ = fingerprint;
}

Tensor ImputedRnnModel::imputed_matrix(const SubjectData& s) const {
  if (cfg_.fill == FillKind::kForward && !fitted_)
    throw ContractError("fill medians not fitted before use");
  BinnedSeries series = bin_uniform_windows(s, cfg_.items,
                                            cfg_.window_minutes,
                                            cfg_.horizon_minutes);
  impute_series(series, cfg_.fill,
                fitted_ ? fill_values_
                        : std::vector<double>(cfg_.items.size(), 0.0));
  return series.values;
}

Var ImputedRnnModel::predict(Tape& t, const SubjectData& s) {
  Var seq = t.value(imputed_matrix(s));
  Var h = cfg_.cell == RnnCell::kLstm
              ? lstm_forward(t, params_, "rnn", seq, cfg_.hidden)
              : gru_forward(t, params_, "rnn", seq, cfg_.hidden);
  Var out = linear_forward_vec(t, params_, "head", h);
  if (cfg_.task == TaskKind::kRegression) return out;
  return t.log_softmax_last(out);
}

std::vector<ParameterSet*> ImputedRnnModel::param_sets() { return {&params_}; }

}  // namespace chronofuse
