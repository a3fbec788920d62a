#include "chronofuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "chronofuse/errors.hpp"

namespace chronofuse {

namespace {

void check_binary_inputs(const std::vector<double>& scores,
                         const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw ContractError("scores and labels differ in length");
  if (scores.empty()) throw ContractError("metric over an empty sample");
  for (double s : scores)
    if (!std::isfinite(s)) throw NumericError("non-finite score");
  bool pos = false, neg = false;
  for (int l : labels) {
    if (l == 1)
      pos = true;
    else if (l == 0)
      neg = true;
    else
      throw ContractError("binary labels must be 0 or 1");
  }
  if (!pos || !neg)
    throw MetricError("metric undefined: only one class present");
}

}  // namespace

double auroc(const std::vector<double>& scores,
             const std::vector<int>& labels) {
  check_binary_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  std::int64_t total_pos = 0, total_neg = 0;
  for (int l : labels) (l == 1 ? total_pos : total_neg)++;

  // twice_wins_plus_ties = 2 * #{(p,n): s_p > s_n} + #{(p,n): s_p == s_n}
  std::int64_t twice = 0;
  std::int64_t neg_below = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    std::int64_t grp_pos = 0, grp_neg = 0;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? grp_pos : grp_neg)++;
      ++j;
    }
    twice += 2 * grp_pos * neg_below + grp_pos * grp_neg;
    neg_below += grp_neg;
    i = j;
  }
  return static_cast<double>(twice) /
         static_cast<double>(2 * total_pos * total_neg);
}

double auprc(const std::vector<double>& scores,
             const std::vector<int>& labels) {
  check_binary_inputs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  std::int64_t total_pos = 0;
  for (int l : labels) total_pos += (l == 1);

  double ap = 0.0;
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    const std::int64_t tp_prev = tp;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp)++;
      ++j;
    }
    ap += (static_cast<double>(tp - tp_prev) /
           static_cast<double>(total_pos)) *
          (static_cast<double>(tp) / static_cast<double>(tp + fp));
    i = j;
  }
  return ap;
}

namespace {

double macro_over_classes(const std::vector<std::vector<double>>& scores,
                          const std::vector<int>& labels, int n_classes,
                          double (*metric)(const std::vector<double>&,
                                           const std::vector<int>&)) {
  if (scores.size() != labels.size())
    throw ContractError("scores and labels differ in length");
  if (scores.empty()) throw ContractError("metric over an empty sample");
  if (n_classes < 2) throw ConfigError("need >= 2 classes");
  std::set<int> present(labels.begin(), labels.end());
  for (int c : present)
    if (c < 0 || c >= n_classes)
      throw ContractError("label " + std::to_string(c) + " outside [0," +
                          std::to_string(n_classes) + ")");
  if (present.size() < 2)
    throw MetricError("metric undefined: only one class present");
  double sum = 0.0;
  int used = 0;
  for (int c : present) {
    std::vector<double> s;
    std::vector<int> l;
    s.reserve(scores.size());
    l.reserve(labels.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (static_cast<int>(scores[i].size()) != n_classes)
        throw DimensionError("per-class score row has " +
                             std::to_string(scores[i].size()) +
                             " entries, expected " + std::to_string(n_classes));
      s.push_back(scores[i][static_cast<std::size_t>(c)]);
      l.push_back(labels[i] == c ? 1 : 0);
    }
    sum += metric(s, l);
    ++used;
  }
  return sum / static_cast<double>(used);
}

}  // namespace

double auroc_macro(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& labels, int n_classes) {
  return macro_over_classes(scores, labels, n_classes, &auroc);
}

double auprc_macro(const std::vector<std::vector<double>>& scores,
                   const std::vector<int>& labels, int n_classes) {
  return macro_over_classes(scores, labels, n_classes, &auprc);
}

namespace {

template <typename Fn>
void sweep_thresholds(const std::vector<double>& scores,
                      const std::vector<int>& labels, Fn&& emit) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });
  std::int64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] == 1 ? tp : fp)++;
      ++j;
    }
    emit(tp, fp);
    i = j;
  }
}

}  // namespace

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  check_binary_inputs(scores, labels);
  std::int64_t pos = 0, neg = 0;
  for (int l : labels) (l == 1 ? pos : neg)++;
  std::vector<RocPoint> out;
  out.push_back({0.0, 0.0});
  sweep_thresholds(scores, labels, [&](std::int64_t tp, std::int64_t fp) {
    out.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                   static_cast<double>(tp) / static_cast<double>(pos)});
  });
  return out;
}

std::vector<PrPoint> pr_points(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
  check_binary_inputs(scores, labels);
  std::int64_t pos = 0;
  for (int l : labels) pos += (l == 1);
  std::vector<PrPoint> out;
  sweep_thresholds(scores, labels, [&](std::int64_t tp, std::int64_t fp) {
    out.push_back({static_cast<double>(tp) / static_cast<double>(pos),
                   static_cast<double>(tp) / static_cast<double>(tp + fp)});
  });
  return out;
}

std::pair<double, double> mae_mse(const std::vector<double>& preds,
                                  const std::vector<double>& targets) {
  if (preds.size() != targets.size())
    throw ContractError("preds and targets differ in length");
  if (preds.empty()) throw ContractError("metric over an empty sample");
  double ae = 0.0, se = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double e = preds[i] - targets[i];
    ae += std::fabs(e);
    se += e * e;
  }
  const double n = static_cast<double>(preds.size());
  return {ae / n, se / n};
}

MissingnessProfile missingness_profile(
    const std::vector<const SubjectData*>& subjects,
    const std::vector<std::string>& items, int n_intervals,
    double horizon_minutes) {
  if (subjects.empty()) throw ContractError("profile over an empty cohort");
  if (items.empty()) throw ContractError("profile needs >= 1 item");
  if (n_intervals < 1) throw ConfigError("n_intervals must be >= 1");
  if (!(horizon_minutes > 0.0)) throw ConfigError("horizon must be positive");

  MissingnessProfile out;
  out.items = items;
  out.edges.resize(static_cast<std::size_t>(n_intervals) + 1);
  const double denom = std::pow(2.0, n_intervals) - 1.0;
  for (int k = 0; k <= n_intervals; ++k)
    out.edges[static_cast<std::size_t>(k)] =
        horizon_minutes * (std::pow(2.0, k) - 1.0) / denom;

  out.ratio.assign(items.size(),
                   std::vector<double>(static_cast<std::size_t>(n_intervals),
                                       0.0));
  for (std::size_t ii = 0; ii < items.size(); ++ii) {
    for (int k = 0; k < n_intervals; ++k) {
      const double lo = out.edges[static_cast<std::size_t>(k)];
      const double hi = out.edges[static_cast<std::size_t>(k) + 1];
      std::int64_t covered = 0;
      for (const SubjectData* s : subjects) {
        bool hit = false;
        for (const TimedObservation& o : s->labs) {
          if (o.item_id != items[ii]) continue;
          const bool last = (k == n_intervals - 1);
          if (o.timestamp >= lo && (o.timestamp < hi ||
                                    (last && o.timestamp <= hi))) {
            hit = true;
            break;
          }
        }
        covered += hit;
      }
      out.ratio[ii][static_cast<std::size_t>(k)] =
          1.0 - static_cast<double>(covered) /
                    static_cast<double>(subjects.size());
    }
  }
  return out;
}

}  // namespace chronofuse
