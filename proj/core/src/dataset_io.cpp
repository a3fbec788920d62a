#include "chronofuse/dataset_io.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "chronofuse/errors.hpp"

namespace chronofuse {

using nlohmann::json;

Sha256::Sha256() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1)
    throw IoError("failed to initialize SHA-256");
  ctx_ = ctx;
}

Sha256::~Sha256() {
  if (ctx_ != nullptr) EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256::update(const void* data, std::size_t len) {
  if (ctx_ == nullptr) throw ContractError("SHA-256 already finalized");
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1)
    throw IoError("SHA-256 update failed");
}

std::string Sha256::hex() {
  if (ctx_ == nullptr) throw ContractError("SHA-256 already finalized");
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int out_len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out, &out_len) != 1)
    throw IoError("SHA-256 finalize failed");
  EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
  ctx_ = nullptr;
  static const char* kHex = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * out_len);
  for (unsigned int i = 0; i < out_len; ++i) {
    hex.push_back(kHex[out[i] >> 4]);
    hex.push_back(kHex[out[i] & 0xf]);
  }
  return hex;
}

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes);
  return h.hex();
}

namespace {

json config_to_json(const CohortConfig& c) {
  json j;
  j["n_subjects"] = c.n_subjects;
  j["n_static"] = c.n_static;
  j["n_lab_items"] = c.n_lab_items;
  j["n_vital_items"] = c.n_vital_items;
  j["signal_leads"] = c.signal_leads;
  j["signal_samples"] = c.signal_samples;
  j["text_vocab"] = c.text_vocab;
  j["n_ecg_features"] = c.n_ecg_features;
  j["horizon_minutes"] = c.horizon_minutes;
  j["task"] = task_kind_name(c.task);
  j["class_priors"] = c.class_priors;
  j["mnar_intensity"] = c.mnar_intensity;
  j["lab_rate_per_hour"] = c.lab_rate_per_hour;
  j["coupling"] = c.coupling;
  j["ecg_missing_fraction"] = c.ecg_missing_fraction;
  j["w_static"] = c.w_static;
  j["w_lab"] = c.w_lab;
  j["w_vitals"] = c.w_vitals;
  j["w_ecg"] = c.w_ecg;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  return j;
}

CohortConfig config_from_json(const json& j) {
  CohortConfig c;
  c.n_subjects = j.at("n_subjects").get<int>();
  c.n_static = j.at("n_static").get<int>();
  c.n_lab_items = j.at("n_lab_items").get<int>();
  c.n_vital_items = j.at("n_vital_items").get<int>();
  c.signal_leads = j.at("signal_leads").get<int>();
  c.signal_samples = j.at("signal_samples").get<int>();
  c.text_vocab = j.at("text_vocab").get<int>();
  c.n_ecg_features = j.at("n_ecg_features").get<int>();
  c.horizon_minutes = j.at("horizon_minutes").get<double>();
  c.task = task_kind_from_name(j.at("task").get<std::string>());
  c.class_priors = j.at("class_priors").get<std::vector<double>>();
  c.mnar_intensity = j.at("mnar_intensity").get<double>();
  c.lab_rate_per_hour = j.at("lab_rate_per_hour").get<double>();
  c.coupling = j.at("coupling").get<double>();
  c.ecg_missing_fraction = j.at("ecg_missing_fraction").get<double>();
  c.w_static = j.at("w_static").get<double>();
  c.w_lab = j.at("w_lab").get<double>();
  c.w_vitals = j.at("w_vitals").get<double>();
  c.w_ecg = j.at("w_ecg").get<double>();
  c.noise = j.at("noise").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json subject_to_json(const SubjectData& s, std::size_t& signal_counter) {
  json j;
  j["id"] = s.subject_id;
  j["horizon"] = s.horizon_minutes;
  j["static"] = s.static_features;
  json labs = json::array();
  for (const TimedObservation& o : s.labs)
    labs.push_back(json::array({o.item_id, o.timestamp, o.value,
                                o.categorical ? 1 : 0, o.category}));
  j["labs"] = std::move(labs);
  json vit;
  vit["items"] = s.vitals.items;
  vit["start"] = s.vitals.start_minute;
  vit["step"] = s.vitals.step_minute;
  vit["values"] = s.vitals.values;
  json mask = json::array();
  for (const auto& row : s.vitals.mask) {
    json r = json::array();
    for (std::uint8_t m : row) r.push_back(static_cast<int>(m));
    mask.push_back(std::move(r));
  }
  vit["mask"] = std::move(mask);
  j["vitals"] = std::move(vit);
  json ecg = json::array();
  for (const EcgRecord& r : s.ecg) {
    json rec;
    rec["t"] = r.timestamp;
    rec["features"] = r.features;
    rec["text"] = r.text_tokens;
    rec["signal"] = signal_counter++;
    ecg.push_back(std::move(rec));
  }
  j["ecg"] = std::move(ecg);
  json label;
  label["kind"] = task_kind_name(s.label.kind);
  label["cls"] = s.label.cls;
  label["value"] = s.label.value;
  j["label"] = std::move(label);
  return j;
}

void append_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t take_u64(const std::string& bytes, std::size_t at) {
  if (at + 8 > bytes.size())
    throw ParseError("signals.idx truncated at byte " + std::to_string(at));
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(
             static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]))
         << (8 * i);
  return v;
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write to " + p.string());
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return std::move(ss).str();
}

float f32_from_le(const std::string& bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(
             static_cast<unsigned char>(bytes[at + static_cast<std::size_t>(i)]))
         << (8 * i);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

void append_f32_le(std::string& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

void write_dataset(const CohortDataset& ds, const std::string& dir) {
  if (ds.schema_version != 1)
    throw MigrationError("cannot write schema version " +
                         std::to_string(ds.schema_version));
  std::filesystem::create_directories(dir);

  std::string jsonl;
  std::string bin;
  std::string idx;
  std::size_t signal_counter = 0;
  std::vector<std::uint64_t> offsets;
  for (const SubjectData& s : ds.subjects) {
    for (const EcgRecord& r : s.ecg) {
      offsets.push_back(bin.size());
      for (double v : r.signal.data)
        append_f32_le(bin, static_cast<float>(v));
    }
    jsonl += subject_to_json(s, signal_counter).dump();
    jsonl += '\n';
  }
  append_u64(idx, offsets.size());
  for (std::uint64_t o : offsets) append_u64(idx, o);

  Sha256 h;
  h.update(jsonl);
  h.update(bin);
  const std::string digest = h.hex();

  json manifest;
  manifest["schema_version"] = ds.schema_version;
  manifest["digest"] = digest;
  manifest["n_subjects"] = ds.subjects.size();
  manifest["n_signals"] = offsets.size();
  manifest["config"] = config_to_json(ds.config);

  const std::filesystem::path root(dir);
  write_file(root / "subjects.jsonl", jsonl);
  write_file(root / "signals.bin", bin);
  write_file(root / "signals.idx", idx);
  write_file(root / "manifest.json", manifest.dump(2) + "\n");
}

std::string dataset_digest(const std::string& dir) {
  const std::filesystem::path root(dir);
  json manifest;
  try {
    manifest = json::parse(read_file(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }
  if (!manifest.contains("digest") || !manifest["digest"].is_string())
    throw ParseError("manifest.json lacks a digest field");
  return manifest["digest"].get<std::string>();
}

CohortDataset read_dataset(const std::string& dir) {
  const std::filesystem::path root(dir);

  json manifest;
  try {
    manifest = json::parse(read_file(root / "manifest.json"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }
  int version = 0;
  try {
    version = manifest.at("schema_version").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }
  if (version != 1)
    throw MigrationError("dataset schema version " + std::to_string(version) +
                         " is not supported (expected 1)");

  CohortDataset ds;
  ds.schema_version = version;
  try {
    ds.config = config_from_json(manifest.at("config"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json config: ") + e.what());
  }

  const std::string jsonl = read_file(root / "subjects.jsonl");
  const std::string bin = read_file(root / "signals.bin");
  const std::string idx = read_file(root / "signals.idx");

  const std::uint64_t n_signals = take_u64(idx, 0);
  std::vector<std::uint64_t> offsets;
  offsets.reserve(n_signals);
  for (std::uint64_t i = 0; i < n_signals; ++i)
    offsets.push_back(take_u64(idx, 8 + 8 * static_cast<std::size_t>(i)));
  const std::size_t block =
      static_cast<std::size_t>(ds.config.signal_leads) *
      static_cast<std::size_t>(ds.config.signal_samples) * 4;
  for (std::uint64_t o : offsets)
    if (o + block > bin.size())
      throw ParseError("signals.bin truncated: block at offset " +
                       std::to_string(o) + " runs past end of file");

  std::istringstream lines(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("subjects.jsonl line " + std::to_string(line_no) +
                       ": " + e.what());
    }
    try {
      SubjectData s;
      s.subject_id = j.at("id").get<std::string>();
      s.horizon_minutes = j.at("horizon").get<double>();
      s.static_features = j.at("static").get<std::vector<double>>();
      for (const json& row : j.at("labs")) {
        TimedObservation o;
        o.subject_id = s.subject_id;
        o.item_id = row.at(0).get<std::string>();
        o.timestamp = row.at(1).get<double>();
        o.value = row.at(2).get<double>();
        o.categorical = row.at(3).get<int>() != 0;
        o.category = row.at(4).get<int>();
        s.labs.push_back(std::move(o));
      }
      const json& vit = j.at("vitals");
      s.vitals.items = vit.at("items").get<std::vector<std::string>>();
      s.vitals.start_minute = vit.at("start").get<double>();
      s.vitals.step_minute = vit.at("step").get<double>();
      s.vitals.values =
          vit.at("values").get<std::vector<std::vector<double>>>();
      for (const json& row : vit.at("mask")) {
        std::vector<std::uint8_t> r;
        for (const json& m : row)
          r.push_back(static_cast<std::uint8_t>(m.get<int>() != 0 ? 1 : 0));
        s.vitals.mask.push_back(std::move(r));
      }
      for (const json& rec : j.at("ecg")) {
        EcgRecord r;
        r.timestamp = rec.at("t").get<double>();
        r.features = rec.at("features").get<std::vector<double>>();
        r.text_tokens = rec.at("text").get<std::vector<int>>();
        const std::uint64_t sig = rec.at("signal").get<std::uint64_t>();
        if (sig >= offsets.size())
          throw ParseError("subjects.jsonl line " + std::to_string(line_no) +
                           ": signal index " + std::to_string(sig) +
                           " outside signals.idx");
        r.signal =
            Tensor::zeros({ds.config.signal_leads, ds.config.signal_samples});
        const std::size_t base = static_cast<std::size_t>(
            offsets[static_cast<std::size_t>(sig)]);
        for (std::size_t k = 0; k < r.signal.data.size(); ++k)
          r.signal.data[k] =
              static_cast<double>(f32_from_le(bin, base + 4 * k));
        s.ecg.push_back(std::move(r));
      }
      const json& lab = j.at("label");
      s.label.kind = task_kind_from_name(lab.at("kind").get<std::string>());
      s.label.cls = lab.at("cls").get<int>();
      s.label.value = lab.at("value").get<double>();
      ds.subjects.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw ParseError("subjects.jsonl line " + std::to_string(line_no) +
                       ": " + e.what());
    }
  }
  if (ds.subjects.size() != manifest.at("n_subjects").get<std::size_t>())
    throw ParseError("subjects.jsonl holds " +
                     std::to_string(ds.subjects.size()) +
                     " records but the manifest declares " +
                     std::to_string(
                         manifest.at("n_subjects").get<std::size_t>()));

  Sha256 h;
  h.update(jsonl);
  h.update(bin);
  if (h.hex() != manifest.at("digest").get<std::string>())
    throw ParseError("content digest mismatch: dataset files do not match "
                     "the manifest");
  return ds;
}

}  // namespace chronofuse
