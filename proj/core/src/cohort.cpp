#include "chronofuse/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "chronofuse/errors.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string padded_name(const std::string& prefix, int i, int width) {
  std::string digits = std::to_string(i);
  while (static_cast<int>(digits.size()) < width) digits = "0" + digits;
  return prefix + digits;
}

}  // namespace

std::vector<std::string> lab_item_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(padded_name("lab", i, 2));
  return out;
}

std::vector<std::string> vital_item_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(padded_name("vit", i, 2));
  return out;
}

std::vector<double> CohortConfig::default_priors_multiclass4() {
  const double counts[4] = {125987.0, 18445.0, 4927.0, 21418.0};
  const double total = counts[0] + counts[1] + counts[2] + counts[3];
  return {counts[0] / total, counts[1] / total, counts[2] / total,
          counts[3] / total};
}

std::vector<double> CohortConfig::default_priors_binary() {
  const std::vector<double> four = default_priors_multiclass4();
  return {four[0], four[1] + four[2] + four[3]};
}

std::vector<double> CohortConfig::effective_priors() const {
  if (task == TaskKind::kRegression) {
    if (!class_priors.empty())
      throw ConfigError("regression task takes no class priors");
    return {};
  }
  const int k = task == TaskKind::kMulticlass4 ? 4 : 2;
  if (class_priors.empty())
    return k == 4 ? default_priors_multiclass4() : default_priors_binary();
  if (static_cast<int>(class_priors.size()) != k)
    throw ConfigError("expected " + std::to_string(k) + " class priors, got " +
                      std::to_string(class_priors.size()));
  return class_priors;
}

void CohortConfig::validate() const {
  auto positive = [](int v, const char* what) {
    if (v < 1) throw ConfigError(std::string(what) + " must be positive");
  };
  positive(n_subjects, "n_subjects");
  positive(n_static, "n_static");
  positive(n_lab_items, "n_lab_items");
  positive(n_vital_items, "n_vital_items");
  positive(signal_leads, "signal_leads");
  positive(signal_samples, "signal_samples");
  positive(text_vocab, "text_vocab");
  positive(n_ecg_features, "n_ecg_features");
  if (text_vocab > 143)
    throw ConfigError("text_vocab exceeds the 143-term vocabulary cap");
  if (!(horizon_minutes > 0.0))
    throw ConfigError("horizon_minutes must be positive");
  if (ecg_missing_fraction < 0.0 || ecg_missing_fraction > 1.0)
    throw ConfigError("ecg_missing_fraction outside [0,1]");
  if (lab_rate_per_hour < 0.0)
    throw ConfigError("lab_rate_per_hour must be nonnegative");
  const std::vector<double> priors = effective_priors();
  if (!priors.empty()) {
    double sum = 0.0;
    for (double p : priors) {
      if (p < 0.0) throw ConfigError("class priors must be nonnegative");
      sum += p;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
      throw ConfigError("class priors must sum to 1");
  }
}

namespace {

struct SubjectDraw {
  SubjectData data;
  double score = 0.0;  // classification ranking score, noise included
};

/// Severity at minute t for the MNAR sampling intensity and the vitals
/// level: a per-subject baseline plus a linear drift over the horizon.
double severity_at(double u_vit, double u_lab, double t, double horizon) {
  return 0.5 * u_vit + u_lab * (t / horizon);
}

SubjectDraw generate_subject(const CohortConfig& cfg, int index) {
  Rng rng(hash_combine(hash_combine(cfg.seed, hash_str("subject")),
                       static_cast<std::uint64_t>(index)));
  SubjectDraw out;
  SubjectData& s = out.data;
  s.subject_id = padded_name("s", index, 6);
  s.horizon_minutes = cfg.horizon_minutes;
  const double T = cfg.horizon_minutes;

  // Orthogonal per-subject latents, one per modality.
  const double u_static = rng.normal();
  const double u_lab = rng.normal();    // planted lab trend (slope)
  const double u_vit = rng.normal();    // vitals level
  const double u_sig = rng.normal();    // signal morphology
  const double lab_level = rng.normal();  // nuisance per-subject intercept

  // Static vector: first half loads on the static latent, rest pure noise.
  s.static_features.resize(static_cast<std::size_t>(cfg.n_static));
  for (int j = 0; j < cfg.n_static; ++j) {
    const double c = j < cfg.n_static / 2 ? 0.8 : 0.0;
    s.static_features[static_cast<std::size_t>(j)] =
        c * u_static + std::sqrt(1.0 - c * c) * rng.normal();
  }

  // Labs: MNAR — the hourly sampling intensity grows with severity. The
  // value of informative items drifts linearly with the planted trend on
  // top of the subject's nuisance intercept, so the trend is visible only
  // across time, not from any single (latest) value.
  const std::vector<std::string> lab_names = lab_item_names(cfg.n_lab_items);
  const int n_hours = static_cast<int>(T / 60.0);
  for (int h = 0; h < n_hours; ++h) {
    const double t_mid = (h + 0.5) * 60.0;
    const double z = severity_at(u_vit, u_lab, t_mid, T);
    const double rate =
        std::min(3.0, cfg.lab_rate_per_hour * std::exp(cfg.mnar_intensity * z));
    for (int i = 0; i < cfg.n_lab_items; ++i) {
      const int count = rng.poisson(rate);
      for (int c = 0; c < count; ++c) {
        TimedObservation o;
        o.subject_id = s.subject_id;
        o.item_id = lab_names[static_cast<std::size_t>(i)];
        o.timestamp = h * 60.0 + rng.uniform(0.0, 60.0);
        const double slope = i < cfg.n_lab_items / 2 ? 1.0 : 0.0;
        o.value = lab_level + slope * u_lab * (o.timestamp / T) +
                  0.3 * rng.normal();
        s.labs.push_back(o);
      }
    }
  }
  std::sort(s.labs.begin(), s.labs.end(),
            [](const TimedObservation& a, const TimedObservation& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              if (a.item_id != b.item_id) return a.item_id < b.item_id;
              return a.value < b.value;
            });

  // Hourly vitals grid with a mostly-observed mask.
  s.vitals.items = vital_item_names(cfg.n_vital_items);
  s.vitals.start_minute = 0.0;
  s.vitals.step_minute = 60.0;
  s.vitals.values.assign(static_cast<std::size_t>(cfg.n_vital_items),
                         std::vector<double>(static_cast<std::size_t>(n_hours),
                                             0.0));
  s.vitals.mask.assign(
      static_cast<std::size_t>(cfg.n_vital_items),
      std::vector<std::uint8_t>(static_cast<std::size_t>(n_hours), 0));
  for (int i = 0; i < cfg.n_vital_items; ++i) {
    const double c = i < cfg.n_vital_items / 2 ? 1.0 : 0.0;
    for (int h = 0; h < n_hours; ++h) {
      const bool observed = rng.bernoulli(0.92);
      const double t_mid = (h + 0.5) * 60.0;
      const double v = c * (u_vit + 0.4 * u_lab * (t_mid / T)) +
                       0.5 * rng.normal();
      if (observed) {
        s.vitals.values[static_cast<std::size_t>(i)]
                       [static_cast<std::size_t>(h)] = v;
        s.vitals.mask[static_cast<std::size_t>(i)]
                     [static_cast<std::size_t>(h)] = 1;
      }
    }
  }

  // Signal records: present for 1 - ecg_missing_fraction of subjects.
  const bool has_ecg = !rng.bernoulli(cfg.ecg_missing_fraction);
  if (has_ecg) {
    const int n_records = 1 + rng.poisson(0.8);
    for (int r = 0; r < n_records; ++r) {
      EcgRecord rec;
      rec.timestamp = rng.uniform(0.0, T);
      rec.features.resize(static_cast<std::size_t>(cfg.n_ecg_features));
      for (int k = 0; k < cfg.n_ecg_features; ++k) {
        const double w = k < (cfg.n_ecg_features + 1) / 2 ? 1.0 : 0.0;
        rec.features[static_cast<std::size_t>(k)] =
            w * u_sig + 0.4 * rng.normal();
      }
      const int n_terms = 1 + rng.poisson(2.5);
      const int half = std::max(1, cfg.text_vocab / 2);
      for (int k = 0; k < n_terms; ++k) {
        const bool matched = rng.bernoulli(0.65);
        const bool upper = (u_sig > 0.0) == matched;
        const int lo = upper ? half : 0;
        const int hi = upper ? cfg.text_vocab : half;
        rec.text_tokens.push_back(
            lo + static_cast<int>(rng.uniform_int(std::max(1, hi - lo))));
      }
      // Quasi-periodic waveform: three harmonics plus a beat train whose
      // spike amplitude carries the morphology latent. Samples are
      // quantized to f32 so the on-disk representation is exact.
      rec.signal = Tensor::zeros({cfg.signal_leads, cfg.signal_samples});
      const double phase0 = rng.uniform(0.0, 2.0 * kPi);
      const int beat_period = std::max(8, cfg.signal_samples / 5);
      const int beat_offset =
          static_cast<int>(rng.uniform_int(beat_period));
      const double amp = 1.0 + 0.8 * u_sig;
      for (int l = 0; l < cfg.signal_leads; ++l) {
        const double phase = phase0 + 0.3 * l;
        for (int k = 0; k < cfg.signal_samples; ++k) {
          const double cyc =
              2.0 * kPi * 3.0 * k / static_cast<double>(cfg.signal_samples);
          double v = std::sin(cyc + phase) + 0.5 * std::sin(2.0 * cyc + phase) +
                     0.25 * std::sin(3.0 * cyc + phase);
          int m = (k - beat_offset) % beat_period;
          if (m < 0) m += beat_period;
          const int dist = std::min(m, beat_period - m);
          v += amp * std::exp(-0.5 * (dist / 6.0) * (dist / 6.0));
          v += 0.1 * rng.normal();
          rec.signal.at(l, k) = static_cast<double>(static_cast<float>(v));
        }
      }
      s.ecg.push_back(rec);
    }
    std::sort(s.ecg.begin(), s.ecg.end(),
              [](const EcgRecord& a, const EcgRecord& b) {
                return a.timestamp < b.timestamp;
              });
  }

  // Label score over the latents plus the cross-modal interaction.
  const double core = cfg.w_static * u_static + cfg.w_lab * u_lab +
                      cfg.w_vitals * u_vit + cfg.w_ecg * u_sig +
                      cfg.coupling * (u_lab * u_sig);
  const double u = rng.uniform();
  const double logistic = std::log(u / (1.0 - u));
  out.score = core + cfg.noise * logistic;

  s.label.kind = cfg.task;
  if (cfg.task == TaskKind::kRegression)
    s.label.value = rng.gamma(2.0, std::exp(0.35 * core));
  return out;
}

}  // namespace

CohortDataset generate_cohort(const CohortConfig& cfg) {
  cfg.validate();
  CohortDataset ds;
  ds.config = cfg;
  ds.subjects.reserve(static_cast<std::size_t>(cfg.n_subjects));

  std::vector<double> scores(static_cast<std::size_t>(cfg.n_subjects));
  for (int i = 0; i < cfg.n_subjects; ++i) {
    SubjectDraw d = generate_subject(cfg, i);
    scores[static_cast<std::size_t>(i)] = d.score;
    ds.subjects.push_back(std::move(d.data));
  }

  if (cfg.task != TaskKind::kRegression) {
    // Class thresholds at the realized score quantiles of the configured
    // priors: rank subjects by score, then cut the ranking at the
    // cumulative-prior boundaries (class 0 = lowest scores = largest
    // default prior).
    const std::vector<double> priors = cfg.effective_priors();
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] < scores[b];
      return a < b;
    });
    std::vector<int> cls_of_rank(n, 0);
    double cum = 0.0;
    std::size_t lo = 0;
    for (std::size_t k = 0; k < priors.size(); ++k) {
      cum += priors[k];
      const std::size_t hi =
          k + 1 == priors.size()
              ? n
              : std::min<std::size_t>(
                    n, static_cast<std::size_t>(
                           std::llround(cum * static_cast<double>(n))));
      for (std::size_t r = lo; r < hi; ++r)
        cls_of_rank[r] = static_cast<int>(k);
      lo = hi;
    }
    for (std::size_t r = 0; r < n; ++r)
      ds.subjects[order[r]].label.cls = cls_of_rank[r];
  }
  return ds;
}

}  // namespace chronofuse
