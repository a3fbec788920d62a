#include "chronofuse/ecg_encoder.hpp"

#include <algorithm>

#include "chronofuse/errors.hpp"

namespace chronofuse {

namespace {

ConvEncoderSpec hf_spec(const EcgEncoderConfig& cfg) {
  ConvEncoderSpec s;
  s.in_ch = cfg.leads;
  s.stem_ch = cfg.hf_stem_ch;
  s.stem_kernel = cfg.hf_stem_kernel;
  s.stem_stride = cfg.hf_stem_stride;
  s.blocks = cfg.hf_blocks;
  s.block_kernel = 3;
  s.block_stride = cfg.hf_block_stride;
  s.out_dim = cfg.d_model;
  return s;
}

ConvEncoderSpec lf_spec(const EcgEncoderConfig& cfg) {
  ConvEncoderSpec s;
  s.in_ch = cfg.d_model;
  s.stem_ch = cfg.lf_channels;
  s.stem_kernel = cfg.lf_kernel;
  s.stem_stride = 1;
  s.blocks = cfg.lf_blocks;
  s.block_kernel = cfg.lf_kernel;
  s.block_stride = 1;
  s.out_dim = cfg.d_model;
  return s;
}

// Stable content order for records sharing a window, so input order can
// never change the pooled sum.
bool record_before(const EcgRecord& a, const EcgRecord& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  if (a.features != b.features) return a.features < b.features;
  if (a.text_tokens != b.text_tokens) return a.text_tokens < b.text_tokens;
  return a.signal.data < b.signal.data;
}

}  // namespace

EcgEncoder::EcgEncoder(EcgEncoderConfig cfg, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
  if (cfg_.leads < 1 || cfg_.samples < 1 || cfg_.d_model < 1 ||
      cfg_.text_vocab < 1 || cfg_.n_features < 1)
    throw ConfigError("ecg encoder config has nonpositive extents");
  declare_conv_encoder(params_, "hf", hf_spec(cfg_));
  params_.add("text_table", {cfg_.text_vocab, cfg_.d_model}, Init::kEmbedding);
  declare_mlp(params_, "feat", {cfg_.n_features, cfg_.d_model, cfg_.d_model});
  declare_linear(params_, "record_fuse", 3 * cfg_.d_model, cfg_.d_model);
  declare_conv_encoder(params_, "lf", lf_spec(cfg_));
}

Var EcgEncoder::encode_signal(Tape& t, const Tensor& signal) const {
  if (signal.rank() != 2 || signal.dim(0) != cfg_.leads ||
      signal.dim(1) != cfg_.samples)
    throw DimensionError("signal shape " + signal.shape_str() +
                         " does not match configured [" +
                         std::to_string(cfg_.leads) + " x " +
                         std::to_string(cfg_.samples) + "]");
  return conv_encoder_forward(t, params_, "hf", hf_spec(cfg_),
                              t.value(signal));
}

Var EcgEncoder::encode_text(Tape& t, const std::vector<int>& tokens) const {
  if (tokens.empty()) return t.value(Tensor({cfg_.d_model}));
  for (int id : tokens)
    if (id < 0 || id >= cfg_.text_vocab)
      throw VocabularyError("text token " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(cfg_.text_vocab));
  std::vector<int> sorted = tokens;
  std::sort(sorted.begin(), sorted.end());
  Var table = t.param(params_.get("text_table"));
  return t.mean_rows(t.rows(table, sorted));
}

Var EcgEncoder::encode_features(Tape& t, const std::vector<double>& f) const {
  if (static_cast<int>(f.size()) != cfg_.n_features)
    throw DimensionError("feature width " + std::to_string(f.size()) +
                         " does not match configured " +
                         std::to_string(cfg_.n_features));
  Tensor in({cfg_.n_features});
  in.data = f;
  in.check_finite("ecg features");
  return mlp_forward(t, params_, "feat",
                     {cfg_.n_features, cfg_.d_model, cfg_.d_model},
                     t.value(std::move(in)));
}

Var EcgEncoder::fuse_record(Tape& t, Var signal_emb, Var text_emb,
                            Var feature_emb) const {
  Var cat = t.concat_vec({signal_emb, text_emb, feature_emb});
  return t.relu(linear_forward_vec(t, params_, "record_fuse", cat));
}

Var EcgEncoder::encode_record(Tape& t, const EcgRecord& rec) const {
  return fuse_record(t, encode_signal(t, rec.signal),
                     encode_text(t, rec.text_tokens),
                     encode_features(t, rec.features));
}

EcgEncoder::Forward EcgEncoder::forward(Tape& t,
                                        const std::vector<EcgRecord>& records,
                                        const TimeWindowScheme& scheme,
                                        double anchor_timestamp) const {
  const int count = scheme.window_count();
  if (count < 1) throw SchemeError("scheme has no windows");

  std::vector<const EcgRecord*> ordered;
  ordered.reserve(records.size());
  for (const EcgRecord& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const EcgRecord* a, const EcgRecord* b) {
              return record_before(*a, *b);
            });

  std::vector<std::vector<Var>> buckets(static_cast<std::size_t>(count));
  for (const EcgRecord* r : ordered) {
    const double dt = scheme.dt_of(r->timestamp, anchor_timestamp);
    const int w = scheme.window_of(dt);
    buckets[static_cast<std::size_t>(w)].push_back(encode_record(t, *r));
  }

  std::vector<Var> micro_rows(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const std::vector<Var>& b = buckets[static_cast<std::size_t>(k)];
    if (b.empty())
      micro_rows[static_cast<std::size_t>(k)] = t.value(Tensor({cfg_.d_model}));
    else if (b.size() == 1)
      micro_rows[static_cast<std::size_t>(k)] = b[0];
    else
      micro_rows[static_cast<std::size_t>(k)] = t.mean_rows(t.stack_rows(b));
  }

  Forward f;
  f.micro = t.stack_rows(micro_rows);
  f.macro = conv_encoder_forward(t, params_, "lf", lf_spec(cfg_),
                                 t.transpose(f.micro));
  std::vector<Var> token_rows = micro_rows;
  token_rows.push_back(f.macro);
  f.tokens = t.stack_rows(token_rows);
  return f;
}

HierEmbedding EcgEncoder::encode_timeline(const std::vector<EcgRecord>& records,
                                          const TimeWindowScheme& scheme,
                                          double anchor_timestamp) const {
  Tape t;
  Forward f = forward(t, records, scheme, anchor_timestamp);
  HierEmbedding out;
  out.micro = t.val(f.micro);
  out.macro = t.val(f.macro);
  return out;
}

}  // namespace chronofuse
