#include "chronofuse/fusion.hpp"

#include <algorithm>
#include <set>

#include "chronofuse/errors.hpp"
#include "chronofuse/nn.hpp"
#include "chronofuse/rng.hpp"

namespace chronofuse {

double FoldContext::anchor_for(const SubjectData& s,
                               const TimeWindowScheme& scheme) const {
  if (scheme.anchor == AnchorKind::kAdmissionRelative) return 0.0;
  double last = -1.0;
  for (const EcgRecord& r : s.ecg) last = std::max(last, r.timestamp);
  return last >= 0.0 ? last : s.horizon_minutes;
}

namespace {

class StaticMlpEncoder final : public ModalityEncoder {
 public:
  StaticMlpEncoder(const ModalityConfig& cfg, std::uint64_t seed)
      : ModalityEncoder(cfg.id),
        dims_({cfg.static_dim, cfg.static_hidden,
               kStaticTokens * cfg.static_token_dim}),
        token_dim_(cfg.static_token_dim),
        params_(seed) {
    if (cfg.static_dim < 1)
      throw ConfigError("static modality '" + cfg.id + "' needs static_dim");
    declare_mlp(params_, "enc", dims_);
  }

  Var tokens(Tape& t, const SubjectData& s, const FoldContext&) override {
    if (static_cast<int>(s.static_features.size()) != dims_.front())
      throw DimensionError("static width " +
                           std::to_string(s.static_features.size()) +
                           " does not match configured " +
                           std::to_string(dims_.front()));
    Tensor in({dims_.front()});
    in.data = s.static_features;
    in.check_finite("static features");
    Var h = mlp_forward(t, params_, "enc", dims_, t.value(std::move(in)));
    return t.reshape(h, {kStaticTokens, token_dim_});
  }

  bool present(const SubjectData& s) const override {
    return !s.static_features.empty();
  }
  int token_count() const override { return kStaticTokens; }
  int token_dim() const override { return token_dim_; }
  ParameterSet& params() override { return params_; }

 private:
  std::vector<int> dims_;
  int token_dim_;
  ParameterSet params_;
};

class SparseModalityEncoder final : public ModalityEncoder {
 public:
  SparseModalityEncoder(const ModalityConfig& cfg, std::uint64_t seed)
      : ModalityEncoder(cfg.id), enc_(cfg.sparse, seed) {}

  Var tokens(Tape& t, const SubjectData& s, const FoldContext& ctx) override {
    ctx.lab_binners.verify_fingerprint(ctx.fingerprint);
    ctx.lab_scheme.verify_fingerprint(ctx.fingerprint);
    const double anchor = ctx.anchor_for(s, ctx.lab_scheme);
    WindowedTokenSet w =
        assign_and_accumulate(s.labs, ctx.lab_scheme, ctx.lab_binners, anchor);
    return enc_.forward(t, w).tokens;
  }

  bool present(const SubjectData& s) const override { return !s.labs.empty(); }
  int token_count() const override { return enc_.config().window_count; }
  int token_dim() const override { return enc_.config().token_dim(); }
  ParameterSet& params() override { return enc_.params(); }
  SparseEncoder& inner() { return enc_; }

 private:
  SparseEncoder enc_;
};

class EcgModalityEncoder final : public ModalityEncoder {
 public:
  EcgModalityEncoder(const ModalityConfig& cfg, std::uint64_t seed)
      : ModalityEncoder(cfg.id), enc_(cfg.ecg, seed), windows_(0) {}

  Var tokens(Tape& t, const SubjectData& s, const FoldContext& ctx) override {
    ctx.ecg_scheme.verify_fingerprint(ctx.fingerprint);
    windows_ = ctx.ecg_scheme.window_count();
    const double anchor = ctx.anchor_for(s, ctx.ecg_scheme);
    return enc_.forward(t, s.ecg, ctx.ecg_scheme, anchor).tokens;
  }

  bool present(const SubjectData& s) const override { return !s.ecg.empty(); }
  int token_count() const override {
    if (windows_ > 0) return windows_ + 1;
    throw ContractError("ecg token count unknown before first use; "
                        "set via set_window_count");
  }
  void set_window_count(int w) { windows_ = w; }
  int token_dim() const override { return enc_.config().d_model; }
  ParameterSet& params() override { return enc_.params(); }
  EcgEncoder& inner() { return enc_; }

 private:
  EcgEncoder enc_;
  int windows_;
};

class VitalsModalityEncoder final : public ModalityEncoder {
 public:
  VitalsModalityEncoder(const ModalityConfig& cfg, std::uint64_t seed)
      : ModalityEncoder(cfg.id), enc_(cfg.vitals, seed) {}

  Var tokens(Tape& t, const SubjectData& s, const FoldContext& ctx) override {
    ctx.vitals_stats.verify_fingerprint(ctx.fingerprint);
    VitalsGrid grid =
        normalize_vitals(upsample_vitals(s.vitals), ctx.vitals_stats);
    std::vector<Tensor> windows = slice_windows(grid, ctx.vitals_window);
    const int expected = enc_.window_count_for(enc_.config().horizon_minutes);
    if (static_cast<int>(windows.size()) != expected)
      throw DimensionError("vitals produced " +
                           std::to_string(windows.size()) +
                           " windows, expected " + std::to_string(expected));
    return enc_.forward(t, windows).tokens;
  }

  bool present(const SubjectData& s) const override {
    for (const auto& row : s.vitals.mask)
      for (std::uint8_t m : row)
        if (m) return true;
    return false;
  }
  int token_count() const override {
    return enc_.window_count_for(enc_.config().horizon_minutes) + 1;
  }
  int token_dim() const override { return enc_.config().d_model; }
  ParameterSet& params() override { return enc_.params(); }
  VitalsEncoder& inner() { return enc_; }

 private:
  VitalsEncoder enc_;
};

}  // namespace

std::unique_ptr<ModalityEncoder> make_modality_encoder(
    const ModalityConfig& cfg, std::uint64_t seed) {
  switch (cfg.kind) {
    case EncoderKind::kStaticMlp:
      return std::make_unique<StaticMlpEncoder>(cfg, seed);
    case EncoderKind::kSparse:
      return std::make_unique<SparseModalityEncoder>(cfg, seed);
    case EncoderKind::kEcg:
      return std::make_unique<EcgModalityEncoder>(cfg, seed);
    case EncoderKind::kVitals:
      return std::make_unique<VitalsModalityEncoder>(cfg, seed);
  }
  throw ConfigError("unknown encoder kind");
}

int fusion_output_width(int n_modalities, int d_shared, bool with_pairs) {
  const int pairs = n_modalities * (n_modalities - 1) / 2;
  return n_modalities * d_shared + (with_pairs ? pairs * d_shared : 0);
}

Var bimodal_attention(Tape& t, Var tokens_i, Var tokens_j) {
  Var i_to_j = t.mean_rows(t.attention(tokens_i, tokens_j, tokens_j));
  Var j_to_i = t.mean_rows(t.attention(tokens_j, tokens_i, tokens_i));
  return t.add(i_to_j, j_to_i);
}

FusionModel::FusionModel(FusionConfig cfg,
                         std::vector<ModalityConfig> modalities,
                         std::shared_ptr<const FoldContext> ctx,
                         std::uint64_t seed)
    : cfg_(cfg),
      mod_cfgs_(std::move(modalities)),
      ctx_(std::move(ctx)),
      fusion_params_(hash_combine(seed, hash_str("fusion"))),
      decoder_params_(hash_combine(seed, hash_str("decoder"))) {
  if (mod_cfgs_.empty()) throw ConfigError("fusion model needs >= 1 modality");
  if (!ctx_) throw ContractError("fusion model needs a fold context");
  if (cfg_.task == TaskKind::kRegression && cfg_.n_outputs != 1)
    throw ConfigError("regression head must have exactly 1 output");
  if (cfg_.task != TaskKind::kRegression && cfg_.n_outputs < 2)
    throw ConfigError("classification head needs >= 2 outputs");
  std::set<std::string> ids;
  for (const ModalityConfig& mc : mod_cfgs_) {
    if (!ids.insert(mc.id).second)
      throw ConfigError("duplicate modality id '" + mc.id + "'");
    encoders_.push_back(
        make_modality_encoder(mc, hash_combine(seed, hash_str(mc.id))));
  }
  // Ecg token counts depend on the fitted scheme; pin them from the context.
  for (auto& enc : encoders_)
    if (auto* e = dynamic_cast<EcgModalityEncoder*>(enc.get()))
      e->set_window_count(ctx_->ecg_scheme.window_count());
  for (auto& enc : encoders_) {
    declare_linear(fusion_params_, "proj." + enc->id(), enc->token_dim(),
                   cfg_.d_shared);
    fusion_params_.add("missing." + enc->id(), {enc->token_dim()},
                       Init::kEmbedding);
  }
  declare_linear(fusion_params_, "shared", cfg_.d_shared, cfg_.d_shared);
  decoder_dims_ = {fused_width(), cfg_.decoder_hidden, cfg_.n_outputs};
  declare_mlp(decoder_params_, "dec", decoder_dims_);
}

int FusionModel::fused_width() const {
  return fusion_output_width(static_cast<int>(encoders_.size()), cfg_.d_shared,
                             !cfg_.no_biattention);
}

ModalityEncoder& FusionModel::encoder(int mi) {
  if (mi < 0 || mi >= modality_count())
    throw IndexError("modality index " + std::to_string(mi) + " outside [0," +
                     std::to_string(modality_count()) + ")");
  return *encoders_[static_cast<std::size_t>(mi)];
}

Var FusionModel::project(Tape& t, int mi, Var raw_tokens) {
  ModalityEncoder& enc = encoder(mi);
  const Tensor& tr = t.val(raw_tokens);
  if (tr.rank() != 2 || tr.dim(1) != enc.token_dim())
    throw DimensionError("modality '" + enc.id() + "' tokens " +
                         tr.shape_str() + " do not match registered width " +
                         std::to_string(enc.token_dim()));
  Var h = linear_forward(t, fusion_params_, "proj." + enc.id(), raw_tokens);
  if (!cfg_.no_shared) h = linear_forward(t, fusion_params_, "shared", h);
  return h;
}

Var FusionModel::projected_tokens(Tape& t, int mi, const SubjectData& s) {
  ModalityEncoder& enc = encoder(mi);
  Var raw;
  if (enc.present(s)) {
    raw = enc.tokens(t, s, *ctx_);
  } else {
    Var m = t.param(fusion_params_.get("missing." + enc.id()));
    std::vector<Var> copies(static_cast<std::size_t>(enc.token_count()), m);
    raw = t.stack_rows(copies);
  }
  return project(t, mi, raw);
}

Var FusionModel::fuse(Tape& t, const SubjectData& s) {
  const int n = modality_count();
  std::vector<Var> projected(static_cast<std::size_t>(n));
  std::vector<Var> parts;
  for (int mi = 0; mi < n; ++mi) {
    projected[static_cast<std::size_t>(mi)] = projected_tokens(t, mi, s);
    parts.push_back(t.mean_rows(projected[static_cast<std::size_t>(mi)]));
  }
  if (!cfg_.no_biattention)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        parts.push_back(bimodal_attention(t, projected[static_cast<std::size_t>(i)],
                                          projected[static_cast<std::size_t>(j)]));
  return t.concat_vec(parts);
}

Var FusionModel::predict(Tape& t, const SubjectData& s) {
  Var out = mlp_forward(t, decoder_params_, "dec", decoder_dims_, fuse(t, s));
  if (cfg_.task == TaskKind::kRegression) return out;
  return t.log_softmax_last(out);
}

std::vector<ParameterSet*> FusionModel::param_sets() {
  std::vector<ParameterSet*> out;
  for (auto& enc : encoders_) out.push_back(&enc->params());
  out.push_back(&fusion_params_);
  out.push_back(&decoder_params_);
  return out;
}

PretrainModel::PretrainModel(ModalityEncoder& enc,
                             std::shared_ptr<const FoldContext> ctx,
                             int head_hidden, int n_outputs, TaskKind task,
                             std::uint64_t seed)
    : enc_(enc),
      ctx_(std::move(ctx)),
      head_dims_({enc.token_dim(), head_hidden, n_outputs}),
      task_(task),
      head_params_(hash_combine(seed, hash_str("pretrain." + enc.id()))) {
  if (!ctx_) throw ContractError("pretrain model needs a fold context");
  declare_mlp(head_params_, "head", head_dims_);
}

Var PretrainModel::predict(Tape& t, const SubjectData& s) {
  if (!enc_.present(s))
    throw ContractError("pretraining sample lacks modality '" + enc_.id() +
                        "'");
  Var pooled = t.mean_rows(enc_.tokens(t, s, *ctx_));
  Var out = mlp_forward(t, head_params_, "head", head_dims_, pooled);
  if (task_ == TaskKind::kRegression) return out;
  return t.log_softmax_last(out);
}

std::vector<ParameterSet*> PretrainModel::param_sets() {
  return {&enc_.params(), &head_params_};
}

}  // namespace chronofuse
