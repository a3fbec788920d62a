// chronofuse command-line driver: data generation, staged training, and
// cross-validated evaluation.  Logs go to stderr; data products go to files
// under --out.  Every report file references its run manifest id.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chronofuse/chronofuse.hpp"

namespace cf = chronofuse;
namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "chronofuse-0.1.0";

// ---------------------------------------------------------------------------
// Key/value config file: "[section]" headers, "key = value" lines, '#'/';'
// comments.  Keys are stored as "section.key".
// ---------------------------------------------------------------------------

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

struct KvConfig {
  std::map<std::string, std::string> values;
  std::string echo;  // raw file contents, echoed into the run manifest
  std::string path;

  static KvConfig from_file(const std::string& file) {
    KvConfig kv;
    kv.path = file;
    std::ifstream in(file);
    if (!in) throw cf::IoError("cannot open config file '" + file + "'");
    std::ostringstream all;
    all << in.rdbuf();
    kv.echo = all.str();

    std::istringstream lines(kv.echo);
    std::string line, section;
    int lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']')
          throw cf::ParseError("config line " + std::to_string(lineno) +
                               ": unterminated section header");
        section = trim(t.substr(1, t.size() - 2));
        continue;
      }
      std::size_t eq = t.find('=');
      if (eq == std::string::npos)
        throw cf::ParseError("config line " + std::to_string(lineno) +
                             ": expected key = value");
      std::string key = trim(t.substr(0, eq));
      std::string val = trim(t.substr(eq + 1));
      if (key.empty())
        throw cf::ParseError("config line " + std::to_string(lineno) +
                             ": empty key");
      kv.values[section.empty() ? key : section + "." + key] = val;
    }
    return kv;
  }

  bool has(const std::string& key) const { return values.count(key) > 0; }

  std::string str(const std::string& key, const std::string& fb) const {
    auto it = values.find(key);
    return it == values.end() ? fb : it->second;
  }

  double num(const std::string& key, double fb) const {
    auto it = values.find(key);
    if (it == values.end()) return fb;
    try {
      std::size_t pos = 0;
      double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(it->second);
      return v;
    } catch (const std::exception&) {
      throw cf::ParseError("config key '" + key + "': '" + it->second +
                           "' is not a number");
    }
  }

  int integer(const std::string& key, int fb) const {
    double v = num(key, static_cast<double>(fb));
    int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw cf::ParseError("config key '" + key + "' must be an integer");
    return i;
  }

  std::uint64_t u64(const std::string& key, std::uint64_t fb) const {
    auto it = values.find(key);
    if (it == values.end()) return fb;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw cf::ParseError("config key '" + key + "': '" + it->second +
                           "' is not an unsigned integer");
    }
  }

  bool flag(const std::string& key, bool fb) const {
    auto it = values.find(key);
    if (it == values.end()) return fb;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw cf::ParseError("config key '" + key + "': '" + v +
                         "' is not a boolean");
  }
};

// ---------------------------------------------------------------------------
// Config assembly: defaults < config file < command-line flags.
// ---------------------------------------------------------------------------

struct Flags {
  std::string config;
  std::string out;
  std::string dataset;
  std::string checkpoints;
  std::string bundle;
  std::string modalities;
  std::string task;
  std::string variants;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 0;  // 0 = not set
  int fold = -1;
  int n_subjects = 0;  // 0 = not set
  bool no_pretrain = false;
  bool no_biattention = false;
  bool no_shared = false;
};

cf::CohortConfig cohort_config(const KvConfig& kv, const Flags& f) {
  cf::CohortConfig c;
  c.n_subjects = kv.integer("cohort.n_subjects", c.n_subjects);
  c.n_static = kv.integer("cohort.n_static", c.n_static);
  c.n_lab_items = kv.integer("cohort.n_lab_items", c.n_lab_items);
  c.n_vital_items = kv.integer("cohort.n_vital_items", c.n_vital_items);
  c.signal_leads = kv.integer("cohort.signal_leads", c.signal_leads);
  c.signal_samples = kv.integer("cohort.signal_samples", c.signal_samples);
  c.text_vocab = kv.integer("cohort.text_vocab", c.text_vocab);
  c.n_ecg_features = kv.integer("cohort.n_ecg_features", c.n_ecg_features);
  c.horizon_minutes = kv.num("cohort.horizon_minutes", c.horizon_minutes);
  if (kv.has("cohort.task"))
    c.task = cf::task_kind_from_name(kv.str("cohort.task", ""));
  if (kv.has("cohort.class_priors")) {
    c.class_priors.clear();
    for (const std::string& p : split_csv(kv.str("cohort.class_priors", ""))) {
      try {
        c.class_priors.push_back(std::stod(p));
      } catch (const std::exception&) {
        throw cf::ParseError("config key 'cohort.class_priors': '" + p +
                             "' is not a number");
      }
    }
  }
  c.mnar_intensity = kv.num("cohort.mnar_intensity", c.mnar_intensity);
  c.lab_rate_per_hour = kv.num("cohort.lab_rate_per_hour", c.lab_rate_per_hour);
  c.coupling = kv.num("cohort.coupling", c.coupling);
  c.ecg_missing_fraction =
      kv.num("cohort.ecg_missing_fraction", c.ecg_missing_fraction);
  c.w_static = kv.num("cohort.w_static", c.w_static);
  c.w_lab = kv.num("cohort.w_lab", c.w_lab);
  c.w_vitals = kv.num("cohort.w_vitals", c.w_vitals);
  c.w_ecg = kv.num("cohort.w_ecg", c.w_ecg);
  c.noise = kv.num("cohort.noise", c.noise);
  c.seed = kv.u64("cohort.seed", c.seed);

  if (f.seed_set) c.seed = f.seed;
  if (!f.task.empty()) c.task = cf::task_kind_from_name(f.task);
  if (f.n_subjects > 0) c.n_subjects = f.n_subjects;
  c.validate();
  return c;
}

void apply_modalities(cf::HarnessConfig& h, const std::string& list) {
  h.use_static = h.use_labs = h.use_ecg = h.use_vitals = false;
  for (const std::string& m : split_csv(list)) {
    if (m == "static")
      h.use_static = true;
    else if (m == "labs")
      h.use_labs = true;
    else if (m == "ecg")
      h.use_ecg = true;
    else if (m == "vitals")
      h.use_vitals = true;
    else
      throw cf::ConfigError("unknown modality '" + m +
                            "' (expected static|labs|ecg|vitals)");
  }
  if (!h.use_static && !h.use_labs && !h.use_ecg && !h.use_vitals)
    throw cf::ConfigError("modality list is empty");
}

cf::HarnessConfig harness_config(const KvConfig& kv, const Flags& f) {
  cf::HarnessConfig h;
  if (kv.has("harness.modalities"))
    apply_modalities(h, kv.str("harness.modalities", ""));
  h.no_pretrain = kv.flag("harness.no_pretrain", h.no_pretrain);
  h.no_biattention = kv.flag("harness.no_biattention", h.no_biattention);
  h.no_shared = kv.flag("harness.no_shared", h.no_shared);
  h.folds = kv.integer("harness.folds", h.folds);
  h.lab_bins = kv.integer("harness.lab_bins", h.lab_bins);
  h.sparse_embed = kv.integer("harness.sparse_embed", h.sparse_embed);
  h.sparse_hidden = kv.integer("harness.sparse_hidden", h.sparse_hidden);
  h.d_shared = kv.integer("harness.d_shared", h.d_shared);
  h.decoder_hidden = kv.integer("harness.decoder_hidden", h.decoder_hidden);
  h.pretrain_head_hidden =
      kv.integer("harness.pretrain_head_hidden", h.pretrain_head_hidden);
  h.max_epochs = kv.integer("harness.max_epochs", h.max_epochs);
  h.batch_size = kv.integer("harness.batch_size", h.batch_size);
  h.lr = kv.num("harness.lr", h.lr);
  h.patience = kv.integer("harness.patience", h.patience);
  h.pretrain_epochs = kv.integer("harness.pretrain_epochs", h.pretrain_epochs);
  h.vitals_window.window_minutes =
      kv.num("harness.window_minutes", h.vitals_window.window_minutes);
  h.vitals_window.step_minutes =
      kv.num("harness.step_minutes", h.vitals_window.step_minutes);
  h.jobs = kv.integer("harness.jobs", h.jobs);
  h.seed = kv.u64("harness.seed", h.seed);

  if (!f.modalities.empty()) apply_modalities(h, f.modalities);
  if (f.no_pretrain) h.no_pretrain = true;
  if (f.no_biattention) h.no_biattention = true;
  if (f.no_shared) h.no_shared = true;
  if (f.jobs > 0) h.jobs = f.jobs;
  if (f.seed_set) h.seed = f.seed;
  return h;
}

// ---------------------------------------------------------------------------
// Run manifest: stable id over the inputs, wall clock only inside the
// manifest file itself so every other product stays byte-identical.
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string config_echo;
  std::string dataset_digest;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> stages;

  std::string id() const {
    std::string canon = "command=" + command + "\n";
    canon += "config=" + config_echo + "\n";
    canon += "seed=" + std::to_string(seed) + "\n";
    canon += "dataset=" + dataset_digest + "\n";
    canon += "version=" + std::string(kArtifactVersion) + "\n";
    return cf::sha256_hex(canon).substr(0, 16);
  }

  void stage(const std::string& name, const std::string& status) {
    stages.emplace_back(name, status);
  }

  void write(const std::string& dir) const {
    nlohmann::json j;
    j["manifest_id"] = id();
    j["command"] = command;
    j["artifact_version"] = kArtifactVersion;
    j["config_path"] = config_path;
    j["config_echo"] = config_echo;
    j["dataset_digest"] = dataset_digest;
    j["seed"] = seed;
    nlohmann::json st = nlohmann::json::array();
    for (const auto& [name, status] : stages)
      st.push_back({{"name", name}, {"status", status}});
    j["stages"] = std::move(st);
    char buf[64];
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    j["wall_clock_utc"] = buf;

    std::ofstream out(dir + "/run_manifest.json", std::ios::binary);
    if (!out)
      throw cf::IoError("cannot write run manifest in '" + dir + "'");
    out << j.dump(2) << "\n";
  }
};

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cf::IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw cf::IoError("short write to '" + path + "'");
}

std::string with_manifest(const std::string& id, const std::string& body) {
  return "# manifest " + id + "\n" + body;
}

std::string json_with_manifest(const std::string& id,
                               const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body);
  j["manifest"] = id;
  return j.dump(2) + "\n";
}

void ensure_out_dir(const std::string& out) {
  if (out.empty()) throw cf::ConfigError("--out is required");
  fs::create_directories(out);
}

// ---------------------------------------------------------------------------
// Shared staged-pipeline pieces.
// ---------------------------------------------------------------------------

struct FoldWorkspace {
  cf::SplitPlan plan;
  int fold = 0;
  std::shared_ptr<cf::FoldContext> ctx;
  std::unique_ptr<cf::FusionModel> model;
  std::vector<const cf::SubjectData*> train, val, test;
};

cf::FusionConfig fusion_config(const cf::HarnessConfig& h, cf::TaskKind task) {
  cf::FusionConfig fc;
  fc.d_shared = h.d_shared;
  fc.decoder_hidden = h.decoder_hidden;
  fc.n_outputs = cf::outputs_for_task(task);
  fc.task = task;
  fc.no_biattention = h.no_biattention;
  fc.no_shared = h.no_shared;
  return fc;
}

FoldWorkspace make_fold_workspace(const cf::CohortDataset& ds,
                                  const cf::HarnessConfig& h, int fold) {
  FoldWorkspace w{cf::make_split_plan(ds, h)};
  if (fold < 0 || fold >= w.plan.fold_count())
    throw cf::ConfigError("--fold must be in [0, " +
                          std::to_string(w.plan.fold_count()) + ")");
  w.fold = fold;
  const cf::FoldSplit& fs = w.plan.fold(fold);
  w.ctx = cf::fit_fold_context(ds, fs.train_ids, fold, h);
  w.model = std::make_unique<cf::FusionModel>(
      fusion_config(h, ds.config.task), cf::modality_configs(ds, h), w.ctx,
      cf::model_seed(h, fold));
  w.train = cf::resolve_subjects(ds, fs.train_ids);
  w.val = cf::resolve_subjects(ds, fs.val_ids);
  w.test = cf::resolve_subjects(ds, fs.test_ids);
  return w;
}

std::string encoder_file(const std::string& id) {
  return "encoder_" + id + ".params";
}

std::string bundle_manifest_text(const cf::FusionModel& m,
                                 const cf::HarnessConfig& h, int fold,
                                 cf::TaskKind task) {
  std::ostringstream out;
  out << "bundle v1\n";
  out << "task " << cf::task_kind_name(task) << "\n";
  out << "fold " << fold << "\n";
  out << "seed " << h.seed << "\n";
  out << "d_shared " << m.config().d_shared << "\n";
  out << "flags no_pretrain=" << (h.no_pretrain ? 1 : 0)
      << " no_biattention=" << (h.no_biattention ? 1 : 0)
      << " no_shared=" << (h.no_shared ? 1 : 0) << "\n";
  for (int mi = 0; mi < m.modality_count(); ++mi) {
    const cf::ModalityEncoder& enc =
        const_cast<cf::FusionModel&>(m).encoder(mi);
    out << "modality " << enc.id() << " tokens=" << enc.token_count()
        << " dim=" << enc.token_dim() << "\n";
  }
  return out.str();
}

int parse_bundle_fold(const std::string& bundle_dir) {
  std::ifstream in(bundle_dir + "/bundle.txt");
  if (!in)
    throw cf::IoError("cannot open bundle manifest '" + bundle_dir +
                      "/bundle.txt'");
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "fold") {
      int f = -1;
      ls >> f;
      if (ls.fail()) break;
      return f;
    }
  }
  throw cf::ParseError("bundle manifest lacks a fold line");
}

void load_params(cf::ParameterSet& dst, const std::string& path) {
  cf::ParameterSet tmp;
  tmp.load(path);
  dst.copy_values_from(tmp);
}

cf::EvalReport single_fold_report(const cf::CohortDataset& ds,
                                  cf::FoldMetrics fm) {
  cf::EvalReport r;
  r.variant = "full";
  r.task = ds.config.task;
  if (ds.config.task == cf::TaskKind::kRegression) {
    r.mean_mae = fm.mae;
    r.mean_mse = fm.mse;
  } else {
    r.mean_auroc = fm.auroc;
    r.mean_auprc = fm.auprc;
  }
  r.folds.push_back(std::move(fm));
  return r;
}

// ---------------------------------------------------------------------------
// Subcommands.
// ---------------------------------------------------------------------------

int cmd_gen(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  cf::CohortConfig cc = cohort_config(kv, f);
  std::fprintf(stderr, "gen: %d subjects, task=%s, seed=%llu\n",
               cc.n_subjects, cf::task_kind_name(cc.task).c_str(),
               static_cast<unsigned long long>(cc.seed));
  cf::CohortDataset ds = cf::generate_cohort(cc);
  cf::write_dataset(ds, f.out);
  const std::string digest = cf::dataset_digest(f.out);

  RunManifest m{"gen", kv.path, kv.echo, digest, cc.seed};
  m.stage("generate", "ok");
  m.stage("write", "ok");
  m.write(f.out);
  std::fprintf(stderr, "gen: wrote %s (digest %s, manifest %s)\n",
               f.out.c_str(), digest.c_str(), m.id().c_str());
  return 0;
}

int cmd_pretrain(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  if (f.dataset.empty()) throw cf::ConfigError("--dataset is required");
  cf::CohortDataset ds = cf::read_dataset(f.dataset);
  cf::HarnessConfig h = harness_config(kv, f);
  const int fold = f.fold < 0 ? 0 : f.fold;
  RunManifest m{"pretrain", kv.path, kv.echo, cf::dataset_digest(f.dataset),
                h.seed};
  m.stage("load_dataset", "ok");

  FoldWorkspace w = make_fold_workspace(ds, h, fold);
  m.stage("fit_fold_context", "ok");
  cf::pretrain_encoders(*w.model, w.train, w.val, h, fold);
  m.stage("pretrain", "ok");

  std::ostringstream ck;
  ck << "checkpoints v1\n";
  ck << "task " << cf::task_kind_name(ds.config.task) << "\n";
  ck << "fold " << fold << "\n";
  ck << "seed " << h.seed << "\n";
  for (int mi = 0; mi < w.model->modality_count(); ++mi) {
    cf::ModalityEncoder& enc = w.model->encoder(mi);
    enc.params().save(f.out + "/" + encoder_file(enc.id()));
    ck << "modality " << enc.id() << " tokens=" << enc.token_count()
       << " dim=" << enc.token_dim() << "\n";
    std::fprintf(stderr, "pretrain: saved encoder '%s'\n", enc.id().c_str());
  }
  write_text(f.out + "/checkpoints.txt", ck.str());
  m.stage("save", "ok");
  m.write(f.out);
  std::fprintf(stderr, "pretrain: wrote %s (manifest %s)\n", f.out.c_str(),
               m.id().c_str());
  return 0;
}

int cmd_train(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  if (f.dataset.empty()) throw cf::ConfigError("--dataset is required");
  cf::CohortDataset ds = cf::read_dataset(f.dataset);
  cf::HarnessConfig h = harness_config(kv, f);
  if (f.checkpoints.empty() && !h.no_pretrain)
    throw cf::ConfigError(
        "--checkpoints is required unless --no-pretrain is set");
  const int fold = f.fold < 0 ? 0 : f.fold;
  RunManifest m{"train", kv.path, kv.echo, cf::dataset_digest(f.dataset),
                h.seed};
  m.stage("load_dataset", "ok");

  FoldWorkspace w = make_fold_workspace(ds, h, fold);
  m.stage("fit_fold_context", "ok");

  if (!h.no_pretrain) {
    for (int mi = 0; mi < w.model->modality_count(); ++mi) {
      cf::ModalityEncoder& enc = w.model->encoder(mi);
      load_params(enc.params(),
                  f.checkpoints + "/" + encoder_file(enc.id()));
    }
    m.stage("load_checkpoints", "ok");
  }

  cf::TrainConfig tc;
  tc.max_epochs = h.max_epochs;
  tc.batch_size = h.batch_size;
  tc.lr = h.lr;
  tc.patience = h.patience;
  tc.task = ds.config.task;
  tc.seed = cf::stage_seed(cf::model_seed(h, fold), "train");
  cf::TrainResult tr =
      cf::train_with_early_stopping(*w.model, w.train, w.val, tc);
  m.stage("train", "ok");
  std::fprintf(stderr,
               "train: fold %d, best epoch %d, best val loss %.6f, "
               "%d epochs run\n",
               fold, tr.best_epoch, tr.best_val_loss, tr.epochs_run);

  for (int mi = 0; mi < w.model->modality_count(); ++mi) {
    cf::ModalityEncoder& enc = w.model->encoder(mi);
    enc.params().save(f.out + "/" + encoder_file(enc.id()));
  }
  w.model->fusion_params().save(f.out + "/fusion.params");
  w.model->decoder_params().save(f.out + "/decoder.params");
  write_text(f.out + "/bundle.txt",
             bundle_manifest_text(*w.model, h, fold, ds.config.task));

  std::string log = "# manifest " + m.id() + "\nepoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < tr.val_losses.size(); ++e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g\n", e,
                  tr.train_losses[e], tr.val_losses[e]);
    log += buf;
  }
  write_text(f.out + "/train_log.csv", log);
  m.stage("save", "ok");
  m.write(f.out);
  std::fprintf(stderr, "train: wrote bundle %s (manifest %s)\n",
               f.out.c_str(), m.id().c_str());
  return 0;
}

int cmd_eval(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  if (f.dataset.empty()) throw cf::ConfigError("--dataset is required");
  if (f.bundle.empty()) throw cf::ConfigError("--bundle is required");
  cf::CohortDataset ds = cf::read_dataset(f.dataset);
  cf::HarnessConfig h = harness_config(kv, f);
  const int fold = parse_bundle_fold(f.bundle);
  const std::string digest = cf::dataset_digest(f.dataset);
  RunManifest m{"eval", kv.path, kv.echo, digest, h.seed};
  m.stage("load_dataset", "ok");

  FoldWorkspace w = make_fold_workspace(ds, h, fold);
  for (int mi = 0; mi < w.model->modality_count(); ++mi) {
    cf::ModalityEncoder& enc = w.model->encoder(mi);
    load_params(enc.params(), f.bundle + "/" + encoder_file(enc.id()));
  }
  load_params(w.model->fusion_params(), f.bundle + "/fusion.params");
  load_params(w.model->decoder_params(), f.bundle + "/decoder.params");
  m.stage("load_bundle", "ok");

  cf::FoldMetrics fm = cf::evaluate_model(
      *w.model, w.test, ds.config.task, cf::outputs_for_task(ds.config.task));
  fm.fold = fold;
  m.stage("evaluate", "ok");

  std::vector<cf::EvalReport> reports{single_fold_report(ds, fm)};
  write_text(f.out + "/metrics.csv",
             with_manifest(m.id(), cf::report_csv(reports)));
  write_text(f.out + "/report.json",
             json_with_manifest(m.id(),
                                cf::report_json(reports, digest, h.seed)));
  m.stage("save", "ok");
  m.write(f.out);
  std::fprintf(stderr, "eval: wrote %s (manifest %s)\n", f.out.c_str(),
               m.id().c_str());
  return 0;
}

int cmd_ablate(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  if (f.dataset.empty()) throw cf::ConfigError("--dataset is required");
  cf::CohortDataset ds = cf::read_dataset(f.dataset);
  cf::HarnessConfig h = harness_config(kv, f);
  const std::string digest = cf::dataset_digest(f.dataset);
  RunManifest m{"ablate", kv.path, kv.echo, digest, h.seed};
  m.stage("load_dataset", "ok");

  std::vector<std::string> variants = split_csv(f.variants);
  if (variants.empty()) {
    variants = {"full", "no_pretrain", "no_biattention", "no_shared"};
    std::vector<std::string> mods;
    if (h.use_static) mods.push_back("static");
    if (h.use_labs) mods.push_back("labs");
    if (h.use_ecg) mods.push_back("ecg");
    if (h.use_vitals) mods.push_back("vitals");
    if (mods.size() > 1)
      for (const std::string& mo : mods) variants.push_back("wo_" + mo);
  }
  std::fprintf(stderr, "ablate: %zu variants over %d folds\n", variants.size(),
               h.folds);
  std::vector<cf::EvalReport> reports = cf::run_ablation(ds, h, variants);
  m.stage("ablation", "ok");

  write_text(f.out + "/ablation.csv",
             with_manifest(m.id(), cf::report_csv(reports)));
  write_text(f.out + "/ablation.json",
             json_with_manifest(m.id(),
                                cf::report_json(reports, digest, h.seed)));
  write_text(f.out + "/loss_curves.csv",
             with_manifest(m.id(), cf::loss_curves_csv(reports)));
  m.stage("save", "ok");
  m.write(f.out);
  std::fprintf(stderr, "ablate: wrote %s (manifest %s)\n", f.out.c_str(),
               m.id().c_str());
  return 0;
}

int cmd_gradcheck(const KvConfig& kv, const Flags& f) {
  const std::uint64_t seed = f.seed_set ? f.seed : 0;
  std::vector<cf::GradSuiteCase> cases = cf::run_gradient_suite(seed);
  double worst = 0.0;
  int failed = 0;
  std::string csv = "case,max_rel_err,coords_checked,passed\n";
  for (const cf::GradSuiteCase& c : cases) {
    worst = std::max(worst, c.report.max_rel_err);
    if (!c.report.passed) ++failed;
    std::fprintf(stderr, "gradcheck %-22s max_rel_err=%.3e %s\n",
                 c.name.c_str(), c.report.max_rel_err,
                 c.report.passed ? "ok" : "FAIL");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.12g,%lld,%d\n", c.name.c_str(),
                  c.report.max_rel_err, c.report.checked,
                  c.report.passed ? 1 : 0);
    csv += buf;
  }
  std::fprintf(stderr, "gradcheck overall max_rel_err=%.3e (%zu/%zu passed)\n",
               worst, cases.size() - static_cast<std::size_t>(failed),
               cases.size());
  if (!f.out.empty()) {
    ensure_out_dir(f.out);
    RunManifest m{"gradcheck", kv.path, kv.echo, "", seed};
    m.stage("gradcheck", failed == 0 ? "ok" : "failed");
    write_text(f.out + "/gradcheck.csv", with_manifest(m.id(), csv));
    m.write(f.out);
  }
  if (failed > 0)
    throw cf::NumericError(std::to_string(failed) +
                           " gradient case(s) above tolerance");
  return 0;
}

int cmd_profile(const KvConfig& kv, const Flags& f) {
  ensure_out_dir(f.out);
  if (f.dataset.empty()) throw cf::ConfigError("--dataset is required");
  cf::CohortDataset ds = cf::read_dataset(f.dataset);
  RunManifest m{"profile", kv.path, kv.echo, cf::dataset_digest(f.dataset),
                0};
  m.stage("load_dataset", "ok");

  std::vector<const cf::SubjectData*> subjects;
  subjects.reserve(ds.subjects.size());
  for (const cf::SubjectData& s : ds.subjects) subjects.push_back(&s);
  const int intervals = 8;
  cf::MissingnessProfile profile = cf::missingness_profile(
      subjects, cf::lab_item_names(ds.config.n_lab_items), intervals,
      ds.config.horizon_minutes);
  write_text(f.out + "/missingness.csv",
             with_manifest(m.id(), cf::missingness_csv(profile)));
  m.stage("profile", "ok");
  m.write(f.out);
  std::fprintf(stderr, "profile: wrote %s (manifest %s)\n", f.out.c_str(),
               m.id().c_str());
  return 0;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r' || c == '"') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-aware multimodal training and evaluation"};
  app.require_subcommand(1);

  Flags f;
  auto add_common = [&](CLI::App* sub, bool with_jobs) {
    sub->add_option("--config", f.config, "key/value config file");
    auto* seed = sub->add_option("--seed", f.seed, "root random seed");
    sub->parse_complete_callback([seed, &f] {
      if (seed->count() > 0) f.seed_set = true;
    });
    if (with_jobs)
      sub->add_option("--jobs", f.jobs, "worker threads for folds");
  };
  auto add_model_flags = [&](CLI::App* sub) {
    sub->add_flag("--no-pretrain", f.no_pretrain,
                  "skip per-modality encoder pretraining");
    sub->add_flag("--no-biattention", f.no_biattention,
                  "drop pairwise cross-attention from fusion");
    sub->add_flag("--no-shared", f.no_shared,
                  "drop the shared projection space");
    sub->add_option("--modalities", f.modalities,
                    "comma list of modalities to use "
                    "(static,labs,ecg,vitals)");
  };

  CLI::App* gen = app.add_subcommand("gen", "generate a synthetic cohort");
  add_common(gen, false);
  gen->add_option("--out", f.out, "output dataset directory")->required();
  gen->add_option("--task", f.task,
                  "prediction task: multiclass|binary|regression");
  gen->add_option("--n-subjects", f.n_subjects, "cohort size override");

  CLI::App* pre = app.add_subcommand(
      "pretrain", "train per-modality encoders on one fold");
  add_common(pre, true);
  add_model_flags(pre);
  pre->add_option("--dataset", f.dataset, "dataset directory")->required();
  pre->add_option("--out", f.out, "checkpoint output directory")->required();
  pre->add_option("--fold", f.fold, "fold index (default 0)");

  CLI::App* tr = app.add_subcommand(
      "train", "train the fusion model from encoder checkpoints");
  add_common(tr, true);
  add_model_flags(tr);
  tr->add_option("--dataset", f.dataset, "dataset directory")->required();
  tr->add_option("--checkpoints", f.checkpoints,
                 "encoder checkpoint directory from 'pretrain'");
  tr->add_option("--out", f.out, "model bundle output directory")->required();
  tr->add_option("--fold", f.fold, "fold index (default 0)");

  CLI::App* ev =
      app.add_subcommand("eval", "evaluate a trained bundle on its fold");
  add_common(ev, true);
  add_model_flags(ev);
  ev->add_option("--dataset", f.dataset, "dataset directory")->required();
  ev->add_option("--bundle", f.bundle, "model bundle directory")->required();
  ev->add_option("--out", f.out, "report output directory")->required();

  CLI::App* ab = app.add_subcommand(
      "ablate", "cross-validated ablation grid over one shared split plan");
  add_common(ab, true);
  add_model_flags(ab);
  ab->add_option("--dataset", f.dataset, "dataset directory")->required();
  ab->add_option("--out", f.out, "report output directory")->required();
  ab->add_option("--variants", f.variants,
                 "comma list of variants (default: full plus ablations)");

  CLI::App* gc =
      app.add_subcommand("gradcheck", "verify analytic gradients");
  add_common(gc, false);
  gc->add_option("--out", f.out, "optional report output directory");

  CLI::App* pf = app.add_subcommand(
      "profile", "per-item missingness over exponential time intervals");
  pf->add_option("--dataset", f.dataset, "dataset directory")->required();
  pf->add_option("--out", f.out, "report output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0)
      std::fprintf(stderr, "error category=usage message=\"%s\"\n",
                   one_line(e.what()).c_str());
    return app.exit(e);
  }

  try {
    KvConfig kv;
    if (!f.config.empty()) kv = KvConfig::from_file(f.config);
    if (gen->parsed()) return cmd_gen(kv, f);
    if (pre->parsed()) return cmd_pretrain(kv, f);
    if (tr->parsed()) return cmd_train(kv, f);
    if (ev->parsed()) return cmd_eval(kv, f);
    if (ab->parsed()) return cmd_ablate(kv, f);
    if (gc->parsed()) return cmd_gradcheck(kv, f);
    if (pf->parsed()) return cmd_profile(kv, f);
    throw cf::ConfigError("no subcommand given");
  } catch (const cf::Error& e) {
    std::fprintf(stderr, "error category=%s message=\"%s\"\n",
                 e.category().c_str(), one_line(e.what()).c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error category=internal message=\"%s\"\n",
                 one_line(e.what()).c_str());
    return 1;
  }
}
