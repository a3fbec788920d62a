#include "chronofuse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "json.hpp"

#include "chronofuse/errors.hpp"
#include "chronofuse/rng.hpp"
#include "chronofuse/stats_tests.hpp"
#include "chronofuse/tokenizer.hpp"
#include "chronofuse/vitals.hpp"
#include "chronofuse/windows.hpp"

namespace chronofuse {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::map<std::string, const SubjectData*> index_subjects(
    const CohortDataset& ds) {
  std::map<std::string, const SubjectData*> out;
  for (const SubjectData& s : ds.subjects) out[s.subject_id] = &s;
  return out;
}

std::vector<const SubjectData*> resolve(
    const std::map<std::string, const SubjectData*>& index,
    const std::vector<std::string>& ids) {
  std::vector<const SubjectData*> out;
  out.reserve(ids.size());
  for (const std::string& id : ids) {
    auto it = index.find(id);
    if (it == index.end())
      throw SplitError("split references unknown subject '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

double anchor_value(const SubjectData& s, AnchorKind kind) {
  if (kind == AnchorKind::kAdmissionRelative) return 0.0;
  double last = -1.0;
  for (const EcgRecord& r : s.ecg) last = std::max(last, r.timestamp);
  return last >= 0.0 ? last : s.horizon_minutes;
}

}  // namespace

int outputs_for_task(TaskKind task) {
  switch (task) {
    case TaskKind::kMulticlass4:
      return 4;
    case TaskKind::kBinary:
      return 2;
    case TaskKind::kRegression:
      return 1;
  }
  throw ConfigError("unknown task kind");
}

std::vector<const SubjectData*> resolve_subjects(
    const CohortDataset& ds, const std::vector<std::string>& ids) {
  return resolve(index_subjects(ds), ids);
}

std::uint64_t model_seed(const HarnessConfig& cfg, int fold) {
  return hash_combine(hash_combine(cfg.seed, hash_str("model")),
                      static_cast<std::uint64_t>(fold));
}

std::uint64_t stage_seed(std::uint64_t mseed, const std::string& stage) {
  return hash_combine(mseed, hash_str(stage));
}

namespace {

void eval_model(TrainableModel& model,
                const std::vector<const SubjectData*>& test, TaskKind task,
                int n_outputs, FoldMetrics& fm) {
  if (task == TaskKind::kRegression) {
    std::vector<double> preds, targets;
    for (const SubjectData* s : test) {
      Tape t;
      preds.push_back(t.val(model.predict(t, *s)).at(0));
      targets.push_back(s->label.value);
    }
    auto [mae, mse] = mae_mse(preds, targets);
    fm.mae = mae;
    fm.mse = mse;
    return;
  }
  if (task == TaskKind::kBinary) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const SubjectData* s : test) {
      Tape t;
      scores.push_back(t.val(model.predict(t, *s)).at(1));
      labels.push_back(s->label.cls);
    }
    fm.auroc = auroc(scores, labels);
    fm.auprc = auprc(scores, labels);
    return;
  }
  std::vector<std::vector<double>> scores;
  std::vector<int> labels;
  for (const SubjectData* s : test) {
    Tape t;
    const Tensor& p = t.val(model.predict(t, *s));
    scores.emplace_back(p.data.begin(), p.data.end());
    labels.push_back(s->label.cls);
  }
  fm.auroc = auroc_macro(scores, labels, n_outputs);
  fm.auprc = auprc_macro(scores, labels, n_outputs);
}

void finalize_means(EvalReport& r) {
  if (r.folds.empty()) return;
  for (const FoldMetrics& f : r.folds) {
    r.mean_auroc += f.auroc;
    r.mean_auprc += f.auprc;
    r.mean_mae += f.mae;
    r.mean_mse += f.mse;
  }
  const double n = static_cast<double>(r.folds.size());
  r.mean_auroc /= n;
  r.mean_auprc /= n;
  r.mean_mae /= n;
  r.mean_mse /= n;
}

TrainConfig base_train_config(const HarnessConfig& cfg, TaskKind task,
                              std::uint64_t seed) {
  TrainConfig tc;
  tc.max_epochs = cfg.max_epochs;
  tc.batch_size = cfg.batch_size;
  tc.lr = cfg.lr;
  tc.patience = cfg.patience;
  tc.task = task;
  tc.seed = seed;
  return tc;
}

}  // namespace

FoldMetrics evaluate_model(TrainableModel& model,
                           const std::vector<const SubjectData*>& test,
                           TaskKind task, int n_outputs) {
  FoldMetrics fm;
  eval_model(model, test, task, n_outputs, fm);
  return fm;
}

void pretrain_encoders(FusionModel& model,
                       const std::vector<const SubjectData*>& train,
                       const std::vector<const SubjectData*>& val,
                       const HarnessConfig& cfg, int fold) {
  const TaskKind task = model.config().task;
  const int n_out = model.config().n_outputs;
  const std::uint64_t mseed = model_seed(cfg, fold);
  for (int mi = 0; mi < model.modality_count(); ++mi) {
    ModalityEncoder& enc = model.encoder(mi);
    std::vector<const SubjectData*> pt, pv;
    for (const SubjectData* s : train)
      if (enc.present(*s)) pt.push_back(s);
    for (const SubjectData* s : val)
      if (enc.present(*s)) pv.push_back(s);
    if (pt.empty() || pv.empty())
      throw PretrainError("modality '" + enc.id() +
                          "' has no samples to pretrain on in fold " +
                          std::to_string(fold));
    TrainConfig ptc = base_train_config(
        cfg, task, stage_seed(mseed, "pretrain." + enc.id()));
    ptc.max_epochs = cfg.pretrain_epochs;
    PretrainModel pm(enc, model.context_ptr(), cfg.pretrain_head_hidden, n_out,
                     task, stage_seed(mseed, "head." + enc.id()));
    train_with_early_stopping(pm, pt, pv, ptc);
  }
}

std::shared_ptr<FoldContext> fit_fold_context(
    const CohortDataset& ds, const std::vector<std::string>& train_ids,
    int fold, const HarnessConfig& cfg) {
  auto index = index_subjects(ds);
  std::vector<const SubjectData*> train = resolve(index, train_ids);
  auto ctx = std::make_shared<FoldContext>();
  ctx->fingerprint = split_fingerprint(fold, SplitRole::kTrain, train_ids);
  ctx->vitals_window = cfg.vitals_window;

  if (cfg.use_labs) {
    std::vector<TimedObservation> obs;
    for (const SubjectData* s : train)
      obs.insert(obs.end(), s->labs.begin(), s->labs.end());
    ItemVocabulary vocab(lab_item_names(ds.config.n_lab_items));
    ctx->lab_binners = BinnerSet::fit(obs, vocab, cfg.lab_bins,
                                      ctx->fingerprint, train_ids);
    TimeWindowScheme probe;
    probe.anchor = cfg.lab_anchor;
    std::vector<double> dts;
    for (const SubjectData* s : train) {
      const double anchor = anchor_value(*s, cfg.lab_anchor);
      for (const TimedObservation& o : s->labs)
        dts.push_back(probe.dt_of(o.timestamp, anchor));
    }
    ctx->lab_scheme = build_time_windows(std::move(dts), cfg.lab_percentiles,
                                         cfg.lab_anchor, ctx->fingerprint);
  }

  if (cfg.use_ecg) {
    TimeWindowScheme probe;
    probe.anchor = AnchorKind::kEcgRelative;
    std::vector<double> dts;
    for (const SubjectData* s : train) {
      if (s->ecg.empty()) continue;
      const double anchor = anchor_value(*s, AnchorKind::kEcgRelative);
      for (const EcgRecord& r : s->ecg)
        dts.push_back(probe.dt_of(r.timestamp, anchor));
    }
    ctx->ecg_scheme =
        build_time_windows(std::move(dts), cfg.ecg_percentiles,
                           AnchorKind::kEcgRelative, ctx->fingerprint);
  }

  if (cfg.use_vitals) {
    std::vector<const VitalsGrid*> grids;
    for (const SubjectData* s : train) grids.push_back(&s->vitals);
    ctx->vitals_stats = fit_vitals_stats(grids, ctx->fingerprint);
  }
  return ctx;
}

std::vector<ModalityConfig> modality_configs(const CohortDataset& ds,
                                             const HarnessConfig& cfg) {
  std::vector<ModalityConfig> out;
  if (cfg.use_static) {
    ModalityConfig m;
    m.id = "static";
    m.kind = EncoderKind::kStaticMlp;
    m.static_dim = ds.config.n_static;
    out.push_back(m);
  }
  if (cfg.use_labs) {
    ModalityConfig m;
    m.id = "labs";
    m.kind = EncoderKind::kSparse;
    m.sparse.n_items = ds.config.n_lab_items;
    m.sparse.bins = cfg.lab_bins;
    m.sparse.embed_dim = cfg.sparse_embed;
    m.sparse.hidden = cfg.sparse_hidden;
    m.sparse.window_count =
        static_cast<int>(cfg.lab_percentiles.size()) - 1;
    out.push_back(m);
  }
  if (cfg.use_ecg) {
    ModalityConfig m;
    m.id = "ecg";
    m.kind = EncoderKind::kEcg;
    m.ecg.leads = ds.config.signal_leads;
    m.ecg.samples = ds.config.signal_samples;
    m.ecg.n_features = ds.config.n_ecg_features;
    m.ecg.text_vocab = ds.config.text_vocab;
    out.push_back(m);
  }
  if (cfg.use_vitals) {
    ModalityConfig m;
    m.id = "vitals";
    m.kind = EncoderKind::kVitals;
    m.vitals.n_items = ds.config.n_vital_items;
    m.vitals.horizon_minutes = ds.config.horizon_minutes;
    m.vitals.window = cfg.vitals_window;
    out.push_back(m);
  }
  if (out.empty()) throw ConfigError("no modality enabled");
  return out;
}

namespace {

FoldMetrics run_fold(const CohortDataset& ds, const HarnessConfig& cfg,
                     const SplitPlan& plan, int fold,
                     const std::map<std::string, const SubjectData*>& index) {
  const FoldSplit& fs = plan.fold(fold);
  const std::vector<const SubjectData*> train = resolve(index, fs.train_ids);
  const std::vector<const SubjectData*> val = resolve(index, fs.val_ids);
  const std::vector<const SubjectData*> test = resolve(index, fs.test_ids);

  std::shared_ptr<FoldContext> ctx =
      fit_fold_context(ds, fs.train_ids, fold, cfg);

  const TaskKind task = ds.config.task;
  const int n_out = outputs_for_task(task);
  FusionConfig fc;
  fc.d_shared = cfg.d_shared;
  fc.decoder_hidden = cfg.decoder_hidden;
  fc.n_outputs = n_out;
  fc.task = task;
  fc.no_biattention = cfg.no_biattention;
  fc.no_shared = cfg.no_shared;

  const std::uint64_t mseed = model_seed(cfg, fold);
  FusionModel model(fc, modality_configs(ds, cfg), ctx, mseed);

  if (!cfg.no_pretrain) pretrain_encoders(model, train, val, cfg, fold);

  FoldMetrics fm;
  fm.fold = fold;
  TrainConfig tc = base_train_config(cfg, task, stage_seed(mseed, "train"));
  fm.train = train_with_early_stopping(model, train, val, tc);
  eval_model(model, test, task, n_out, fm);
  return fm;
}

template <typename FoldFn>
EvalReport run_folds(const CohortDataset& ds, const HarnessConfig& cfg,
                     const SplitPlan& plan, const std::string& variant,
                     FoldFn&& fold_fn) {
  EvalReport report;
  report.variant = variant;
  report.task = ds.config.task;
  const int folds = plan.fold_count();
  report.folds.resize(static_cast<std::size_t>(folds));

  const int jobs = std::max(1, std::min(cfg.jobs, folds));
  if (jobs == 1) {
    for (int f = 0; f < folds; ++f)
      report.folds[static_cast<std::size_t>(f)] = fold_fn(f);
  } else {
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(folds));
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w)
      workers.emplace_back([&] {
        for (int f = next.fetch_add(1); f < folds; f = next.fetch_add(1)) {
          try {
            report.folds[static_cast<std::size_t>(f)] = fold_fn(f);
          } catch (...) {
            errors[static_cast<std::size_t>(f)] = std::current_exception();
          }
        }
      });
    for (std::thread& t : workers) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }
  finalize_means(report);
  return report;
}

EvalReport run_eval_on_plan(const CohortDataset& ds, const HarnessConfig& cfg,
                            const SplitPlan& plan,
                            const std::string& variant) {
  auto index = index_subjects(ds);
  return run_folds(ds, cfg, plan, variant, [&](int f) {
    return run_fold(ds, cfg, plan, f, index);
  });
}

}  // namespace

SplitPlan make_split_plan(const CohortDataset& ds, const HarnessConfig& cfg) {
  std::vector<std::string> ids;
  ids.reserve(ds.subjects.size());
  for (const SubjectData& s : ds.subjects) ids.push_back(s.subject_id);
  return split_cross_subject(ids, cfg.folds, cfg.train_ratio, cfg.val_ratio,
                             cfg.test_ratio, cfg.seed);
}

EvalReport run_eval(const CohortDataset& ds, const HarnessConfig& cfg) {
  return run_eval_on_plan(ds, cfg, make_split_plan(ds, cfg), "full");
}

HarnessConfig apply_variant(const HarnessConfig& base,
                            const std::string& variant) {
  HarnessConfig c = base;
  if (variant == "full") return c;
  if (variant == "no_pretrain") {
    c.no_pretrain = true;
    return c;
  }
  if (variant == "no_biattention") {
    c.no_biattention = true;
    return c;
  }
  if (variant == "no_shared") {
    c.no_shared = true;
    return c;
  }
  auto strip = [&](const std::string& prefix,
                   std::string& out_mod) {
    if (variant.rfind(prefix, 0) != 0) return false;
    out_mod = variant.substr(prefix.size());
    return true;
  };
  std::string mod;
  if (strip("wo_", mod)) {
    if (mod == "static")
      c.use_static = false;
    else if (mod == "labs")
      c.use_labs = false;
    else if (mod == "ecg")
      c.use_ecg = false;
    else if (mod == "vitals")
      c.use_vitals = false;
    else
      throw ConfigError("unknown modality in variant '" + variant + "'");
    return c;
  }
  if (strip("only_", mod)) {
    c.use_static = mod == "static";
    c.use_labs = mod == "labs";
    c.use_ecg = mod == "ecg";
    c.use_vitals = mod == "vitals";
    if (!c.use_static && !c.use_labs && !c.use_ecg && !c.use_vitals)
      throw ConfigError("unknown modality in variant '" + variant + "'");
    return c;
  }
  throw ConfigError("unknown variant '" + variant + "'");
}

std::vector<EvalReport> run_ablation(const CohortDataset& ds,
                                     const HarnessConfig& base,
                                     const std::vector<std::string>& variants) {
  if (variants.empty()) throw ConfigError("ablation grid is empty");
  const SplitPlan plan = make_split_plan(ds, base);
  std::vector<EvalReport> out;
  out.reserve(variants.size());
  for (const std::string& v : variants)
    out.push_back(run_eval_on_plan(ds, apply_variant(base, v), plan, v));
  return out;
}

EvalReport run_static_latest_baseline(const CohortDataset& ds,
                                      const HarnessConfig& cfg) {
  const SplitPlan plan = make_split_plan(ds, cfg);
  auto index = index_subjects(ds);
  const TaskKind task = ds.config.task;
  const int n_out = outputs_for_task(task);
  return run_folds(
      ds, cfg, plan, "baseline_static_latest", [&](int f) -> FoldMetrics {
        const FoldSplit& fs = plan.fold(f);
        StaticLatestConfig bc;
        bc.items = lab_item_names(ds.config.n_lab_items);
        bc.include_static = cfg.use_static;
        bc.static_dim = ds.config.n_static;
        bc.n_outputs = n_out;
        bc.task = task;
        StaticLatestModel model(
            bc, hash_combine(hash_combine(cfg.seed, hash_str("baseline-static")),
                             static_cast<std::uint64_t>(f)));
        TrainConfig tc = base_train_config(
            cfg, task,
            hash_combine(hash_combine(cfg.seed, hash_str("baseline-static-t")),
                         static_cast<std::uint64_t>(f)));
        FoldMetrics fm;
        fm.fold = f;
        fm.train = train_with_early_stopping(model, resolve(index, fs.train_ids),
                                             resolve(index, fs.val_ids), tc);
        eval_model(model, resolve(index, fs.test_ids), task, n_out, fm);
        return fm;
      });
}

EvalReport run_imputed_rnn_baseline(const CohortDataset& ds,
                                    const HarnessConfig& cfg, RnnCell cell,
                                    FillKind fill) {
  const SplitPlan plan = make_split_plan(ds, cfg);
  auto index = index_subjects(ds);
  const TaskKind task = ds.config.task;
  const int n_out = outputs_for_task(task);
  const std::string variant =
      "baseline_rnn_" + rnn_cell_name(cell) + "_" + fill_kind_name(fill);
  return run_folds(ds, cfg, plan, variant, [&, cell, fill](int f) {
    const FoldSplit& fs = plan.fold(f);
    ImputedRnnConfig bc;
    bc.items = lab_item_names(ds.config.n_lab_items);
    bc.cell = cell;
    bc.fill = fill;
    bc.n_outputs = n_out;
    bc.task = task;
    bc.horizon_minutes = ds.config.horizon_minutes;
    ImputedRnnModel model(
        bc, hash_combine(hash_combine(cfg.seed, hash_str("baseline-rnn")),
                         static_cast<std::uint64_t>(f)));
    const std::vector<const SubjectData*> train = resolve(index, fs.train_ids);
    model.fit_fill_values(train,
                          split_fingerprint(f, SplitRole::kTrain,
                                            fs.train_ids));
    TrainConfig tc = base_train_config(
        cfg, task,
        hash_combine(hash_combine(cfg.seed, hash_str("baseline-rnn-t")),
                     static_cast<std::uint64_t>(f)));
    FoldMetrics fm;
    fm.fold = f;
    fm.train = train_with_early_stopping(model, train,
                                         resolve(index, fs.val_ids), tc);
    eval_model(model, resolve(index, fs.test_ids), task, n_out, fm);
    return fm;
  });
}

namespace {

void metric_rows(std::string& out, const EvalReport& r) {
  const bool classification = r.task != TaskKind::kRegression;
  for (const FoldMetrics& f : r.folds) {
    const std::string fold = std::to_string(f.fold);
    if (classification) {
      out += r.variant + "," + fold + ",auroc," + fmt(f.auroc) + "\n";
      out += r.variant + "," + fold + ",auprc," + fmt(f.auprc) + "\n";
    } else {
      out += r.variant + "," + fold + ",mae," + fmt(f.mae) + "\n";
      out += r.variant + "," + fold + ",mse," + fmt(f.mse) + "\n";
    }
  }
  if (classification) {
    out += r.variant + ",mean,auroc," + fmt(r.mean_auroc) + "\n";
    out += r.variant + ",mean,auprc," + fmt(r.mean_auprc) + "\n";
  } else {
    out += r.variant + ",mean,mae," + fmt(r.mean_mae) + "\n";
    out += r.variant + ",mean,mse," + fmt(r.mean_mse) + "\n";
  }
}

}  // namespace

std::string report_csv(const std::vector<EvalReport>& reports) {
  std::string out = "variant,fold,metric,value\n";
  for (const EvalReport& r : reports) metric_rows(out, r);
  return out;
}

std::string report_json(const std::vector<EvalReport>& reports,
                        const std::string& dataset_digest,
                        std::uint64_t seed) {
  nlohmann::json j;
  j["dataset_digest"] = dataset_digest;
  j["seed"] = seed;
  nlohmann::json arr = nlohmann::json::array();
  for (const EvalReport& r : reports) {
    nlohmann::json e;
    e["variant"] = r.variant;
    e["task"] = task_kind_name(r.task);
    nlohmann::json folds = nlohmann::json::array();
    for (const FoldMetrics& f : r.folds) {
      nlohmann::json fj;
      fj["fold"] = f.fold;
      if (r.task != TaskKind::kRegression) {
        fj["auroc"] = f.auroc;
        fj["auprc"] = f.auprc;
      } else {
        fj["mae"] = f.mae;
        fj["mse"] = f.mse;
      }
      fj["best_epoch"] = f.train.best_epoch;
      fj["epochs_run"] = f.train.epochs_run;
      folds.push_back(std::move(fj));
    }
    e["folds"] = std::move(folds);
    if (r.task != TaskKind::kRegression) {
      e["mean_auroc"] = r.mean_auroc;
      e["mean_auprc"] = r.mean_auprc;
    } else {
      e["mean_mae"] = r.mean_mae;
      e["mean_mse"] = r.mean_mse;
    }
    arr.push_back(std::move(e));
  }
  j["reports"] = std::move(arr);
  return j.dump(2) + "\n";
}

std::string loss_curves_csv(const std::vector<EvalReport>& reports) {
  std::string out = "variant,fold,epoch,train_loss,val_loss\n";
  for (const EvalReport& r : reports)
    for (const FoldMetrics& f : r.folds)
      for (std::size_t e = 0; e < f.train.val_losses.size(); ++e)
        out += r.variant + "," + std::to_string(f.fold) + "," +
               std::to_string(e) + "," + fmt(f.train.train_losses[e]) + "," +
               fmt(f.train.val_losses[e]) + "\n";
  return out;
}

std::string missingness_csv(const MissingnessProfile& profile) {
  std::string out = "item,interval,start_minute,end_minute,missing_ratio\n";
  for (std::size_t i = 0; i < profile.items.size(); ++i)
    for (std::size_t k = 0; k + 1 < profile.edges.size(); ++k)
      out += profile.items[i] + "," + std::to_string(k) + "," +
             fmt(profile.edges[k]) + "," + fmt(profile.edges[k + 1]) + "," +
             fmt(profile.ratio[i][k]) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Gradient suite
// ---------------------------------------------------------------------------

namespace {

Tensor random_tensor(Rng& rng, std::vector<int> shape, double scale = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = scale * rng.uniform(-1.0, 1.0);
  return t;
}

GradSuiteCase check_case(const std::string& name,
                         const std::function<Var(Tape&)>& build,
                         const std::vector<Tensor*>& params, int stride = 1) {
  GradSuiteCase c;
  c.name = name;
  c.report = grad_check(build, params, 1e-5, 1e-4, stride);
  return c;
}

// Moves every parameter to a uniform O(0.5) point. Freshly declared nets mix
// magnitudes from 0.02-scale embeddings up to O(1) weights, which leaves
// some analytic gradients below what central differences can resolve; a
// uniformly scaled point keeps the whole check well conditioned.
void randomize_params(const std::vector<Tensor*>& tensors, Rng& rng) {
  for (Tensor* t : tensors)
    for (double& v : t->data) v = rng.uniform(-0.5, 0.5);
}

}  // namespace

std::vector<GradSuiteCase> run_gradient_suite(std::uint64_t seed) {
  std::vector<GradSuiteCase> out;
  auto seeded = [&](const char* name) {
    return hash_combine(seed, hash_str(name));
  };

  {
    ParameterSet ps(seeded("linear"));
    declare_linear(ps, "lin", 5, 3);
    Rng rng(seeded("linear-x"));
    Tensor x = random_tensor(rng, {4, 5});
    out.push_back(check_case(
        "linear",
        [&ps, x](Tape& t) {
          return t.sum_all(
              t.tanh_(linear_forward(t, ps, "lin", t.value(x))));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("mlp"));
    const std::vector<int> dims = {4, 6, 3};
    declare_mlp(ps, "mlp", dims);
    Rng rng(seeded("mlp-x"));
    Tensor x = random_tensor(rng, {4});
    out.push_back(check_case(
        "mlp_relu",
        [&ps, dims, x](Tape& t) {
          return t.sum_all(mlp_forward(t, ps, "mlp", dims, t.value(x)));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("bilstm"));
    declare_bilstm(ps, "b", 3, 3);
    Rng rng(seeded("bilstm-x"));
    Tensor x = random_tensor(rng, {4, 3});
    out.push_back(check_case(
        "bilstm",
        [&ps, x](Tape& t) {
          BiLstmOut o = bilstm_forward(t, ps, "b", t.value(x), 3);
          return t.add(t.sum_all(o.per_step), t.sum_all(o.summary));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("gru"));
    declare_gru(ps, "g", 3, 4);
    Rng rng(seeded("gru-x"));
    Tensor x = random_tensor(rng, {5, 3});
    out.push_back(check_case(
        "gru",
        [&ps, x](Tape& t) {
          return t.sum_all(gru_forward(t, ps, "g", t.value(x), 4));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("conv"));
    ps.add("w", {2, 3, 3}, Init::kKaimingUniform);
    ps.add("b", {2}, Init::kZero);
    Rng rng(seeded("conv-x"));
    Tensor x = random_tensor(rng, {3, 8});
    out.push_back(check_case(
        "conv1d",
        [&ps, x](Tape& t) {
          return t.sum_all(t.conv1d(t.value(x), t.param(ps.get("w")),
                                    t.param(ps.get("b")), 2, 1));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("res"));
    declare_res_block(ps, "rb", 2, 4, 3, 2);
    Rng rng(seeded("res-x"));
    Tensor x = random_tensor(rng, {2, 9});
    out.push_back(check_case(
        "res_block",
        [&ps, x](Tape& t) {
          return t.sum_all(
              res_block_forward(t, ps, "rb", t.value(x), 2, 4, 3, 2));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("attn"));
    Rng rng(seeded("attn-x"));
    ps.add("q", {3, 4}, Init::kZero).data = random_tensor(rng, {3, 4}).data;
    ps.add("k", {5, 4}, Init::kZero).data = random_tensor(rng, {5, 4}).data;
    ps.add("v", {5, 4}, Init::kZero).data = random_tensor(rng, {5, 4}).data;
    out.push_back(check_case(
        "attention",
        [&ps](Tape& t) {
          return t.sum_all(t.attention(t.param(ps.get("q")),
                                       t.param(ps.get("k")),
                                       t.param(ps.get("v"))));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("nll"));
    Rng rng(seeded("nll-x"));
    ps.add("z", {6}, Init::kZero).data = random_tensor(rng, {6}).data;
    out.push_back(check_case(
        "softmax_nll",
        [&ps](Tape& t) {
          return t.nll(t.log_softmax_last(t.param(ps.get("z"))), 2);
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("embed"));
    Rng rng(seeded("embed-x"));
    ps.add("table", {7, 4}, Init::kZero).data =
        random_tensor(rng, {7, 4}).data;
    out.push_back(check_case(
        "embedding_pool",
        [&ps](Tape& t) {
          return t.sum_all(t.tanh_(
              t.mean_rows(t.rows(t.param(ps.get("table")), {1, 3, 3, 5}))));
        },
        ps.tensors()));
  }
  {
    ParameterSet ps(seeded("elt"));
    Rng rng(seeded("elt-x"));
    ps.add("a", {6}, Init::kZero).data = random_tensor(rng, {6}).data;
    ps.add("b", {6}, Init::kZero).data = random_tensor(rng, {6}).data;
    out.push_back(check_case(
        "elementwise",
        [&ps](Tape& t) {
          return t.sum_all(t.mul(t.sigmoid(t.param(ps.get("a"))),
                                 t.tanh_(t.param(ps.get("b")))));
        },
        ps.tensors()));
  }

  // End-to-end: sparse encoder over a hand-built cumulative window set.
  {
    SparseEncoderConfig cfg;
    cfg.n_items = 3;
    cfg.bins = 4;
    cfg.embed_dim = 6;
    cfg.hidden = 5;
    cfg.window_count = 4;
    auto enc = std::make_shared<SparseEncoder>(cfg, seeded("sparse-enc"));
    Rng prng(seeded("sparse-point"));
    randomize_params(enc->params().tensors(), prng);
    WindowedTokenSet w;
    w.windows = {{{0, 0}},
                 {{0, 0}, {5, 1}},
                 {{0, 0}, {5, 1}},
                 {{0, 0}, {5, 1}, {7, 1}, {11, 2}}};
    out.push_back(check_case(
        "sparse_encoder",
        [enc, w](Tape& t) {
          SparseEncoder::Forward f = enc->forward(t, w);
          return t.add(t.sum_all(f.tokens), t.sum_all(f.summary));
        },
        enc->params().tensors()));
  }

  // End-to-end: vitals micro/macro path over three sliced windows.
  {
    VitalsEncoderConfig cfg;
    cfg.n_items = 5;
    cfg.d_attn = 3;
    cfg.d_model = 6;
    cfg.hf_channels = 4;
    cfg.hf_blocks = 1;
    cfg.lf_channels = 4;
    cfg.lf_blocks = 1;
    cfg.horizon_minutes = 480.0;
    auto enc = std::make_shared<VitalsEncoder>(cfg, seeded("vitals-enc"));
    Rng prng(seeded("vitals-point"));
    randomize_params(enc->params().tensors(), prng);
    Rng rng(seeded("vitals-x"));
    std::vector<Tensor> windows;
    for (int i = 0; i < 3; ++i)
      windows.push_back(random_tensor(rng, {5, 16}));
    out.push_back(check_case(
        "vitals_path",
        [enc, windows](Tape& t) {
          // Scaled down so roundoff in the loss stays below what the
          // finite-difference tolerance can absorb on near-zero gradients.
          return t.scale(t.sum_all(enc->forward(t, windows).tokens), 0.05);
        },
        enc->params().tensors()));
  }

  // End-to-end: two-modality fusion forward, one subject complete and one
  // with the second modality absent (exercising the learned missing token).
  {
    std::vector<std::string> members = {"ga", "gb"};
    const std::uint64_t fp = split_fingerprint(0, SplitRole::kTrain, members);
    std::vector<TimedObservation> obs;
    for (int i = 0; i < 8; ++i) {
      TimedObservation o;
      o.subject_id = i % 2 == 0 ? "ga" : "gb";
      o.item_id = i % 3 == 0 ? "it1" : "it0";
      o.timestamp = 30.0 + 170.0 * i;
      o.value = 0.25 * i - 1.0;
      obs.push_back(o);
    }
    auto ctx = std::make_shared<FoldContext>();
    ctx->fingerprint = fp;
    ItemVocabulary vocab({"it0", "it1"});
    ctx->lab_binners = BinnerSet::fit(obs, vocab, 3, fp, members);
    std::vector<double> dts;
    for (const TimedObservation& o : obs) dts.push_back(o.timestamp);
    ctx->lab_scheme = build_time_windows(
        std::move(dts), {0.0, 50.0, 100.0},
        AnchorKind::kAdmissionRelative, fp);

    std::vector<ModalityConfig> mods(2);
    mods[0].id = "static";
    mods[0].kind = EncoderKind::kStaticMlp;
    mods[0].static_dim = 3;
    mods[0].static_hidden = 4;
    mods[0].static_token_dim = 2;
    mods[1].id = "labs";
    mods[1].kind = EncoderKind::kSparse;
    mods[1].sparse.n_items = 2;
    mods[1].sparse.bins = 3;
    mods[1].sparse.embed_dim = 4;
    mods[1].sparse.hidden = 3;
    mods[1].sparse.window_count = 2;

    FusionConfig fc;
    fc.d_shared = 4;
    fc.decoder_hidden = 5;
    fc.n_outputs = 2;
    fc.task = TaskKind::kBinary;
    auto model = std::make_shared<FusionModel>(fc, mods, ctx,
                                               seeded("fusion-model"));
    Rng prng(seeded("fusion-point"));
    randomize_params(model->trainable_tensors(), prng);

    auto sa = std::make_shared<SubjectData>();
    sa->subject_id = "ga";
    sa->static_features = {0.3, -0.7, 1.1};
    for (const TimedObservation& o : obs)
      if (o.subject_id == "ga") sa->labs.push_back(o);
    sa->label = {TaskKind::kBinary, 1, 0.0};
    auto sb = std::make_shared<SubjectData>();
    sb->subject_id = "gb";
    sb->static_features = {-0.9, 0.2, 0.4};
    sb->label = {TaskKind::kBinary, 0, 0.0};

    out.push_back(check_case(
        "fusion_two_modality",
        [model, sa, sb](Tape& t) {
          Var la = task_loss(t, model->predict(t, *sa), sa->label);
          Var lb = task_loss(t, model->predict(t, *sb), sb->label);
          // Scaled down to keep loss roundoff below the tolerance floor.
          return t.scale(t.add(la, lb), 0.02);
        },
        model->trainable_tensors()));
  }

  return out;
}

}  // namespace chronofuse
