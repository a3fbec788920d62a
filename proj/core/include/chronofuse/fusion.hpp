#pragma once

#include <memory>
#include <string>
#include <vector>

#include "chronofuse/ecg_encoder.hpp"
#include "chronofuse/sparse_encoder.hpp"
#include "chronofuse/splits.hpp"
#include "chronofuse/trainer.hpp"
#include "chronofuse/vitals.hpp"
#include "chronofuse/windows.hpp"

namespace chronofuse {

/// Fold-fitted preprocessing artifacts every encoder reads at forward time.
/// All of them carry the fingerprint of the training split they were fitted
/// on; encoders verify it against `fingerprint` before use.
struct FoldContext {
  std::uint64_t fingerprint = 0;
  BinnerSet lab_binners;
  TimeWindowScheme lab_scheme;
  TimeWindowScheme ecg_scheme;
  VitalsStats vitals_stats;
  SlidingWindowConfig vitals_window;

  /// Anchor timestamp for a scheme: admission-relative schemes anchor at
  /// minute 0; ecg-relative schemes anchor at the subject's newest record
  /// (falling back to the horizon end when no records exist).
  double anchor_for(const SubjectData& s, const TimeWindowScheme& scheme) const;
};

enum class EncoderKind { kStaticMlp, kSparse, kEcg, kVitals };

struct ModalityConfig {
  std::string id;
  EncoderKind kind = EncoderKind::kStaticMlp;
  // kStaticMlp
  int static_dim = 0;
  int static_hidden = 16;
  int static_token_dim = 8;  // reshaped to kStaticTokens tokens of this width
  // kSparse / kEcg / kVitals
  SparseEncoderConfig sparse;
  EcgEncoderConfig ecg;
  VitalsEncoderConfig vitals;
};

inline constexpr int kStaticTokens = 4;

/// One modality's native encoder: produces a [g x d] token sequence from the
/// raw sample, before any shared-space projection.
class ModalityEncoder {
 public:
  virtual ~ModalityEncoder() = default;
  virtual Var tokens(Tape& t, const SubjectData& s, const FoldContext& ctx) = 0;
  virtual bool present(const SubjectData& s) const = 0;
  virtual int token_count() const = 0;
  virtual int token_dim() const = 0;
  virtual ParameterSet& params() = 0;
  const std::string& id() const { return id_; }

 protected:
  explicit ModalityEncoder(std::string id) : id_(std::move(id)) {}
  std::string id_;
};

std::unique_ptr<ModalityEncoder> make_modality_encoder(
    const ModalityConfig& cfg, std::uint64_t seed);

struct FusionConfig {
  int d_shared = 16;
  int decoder_hidden = 16;
  int n_outputs = 2;  // K log-probabilities, or 1 for regression
  TaskKind task = TaskKind::kBinary;
  bool no_biattention = false;
  bool no_shared = false;
};

/// The full multimodal model: native encoders, per-modality and shared
/// projections, learned missing-token substitution, pairwise bi-modal
/// attention, concatenation, and the task decoder head.
class FusionModel : public TrainableModel {
 public:
  FusionModel(FusionConfig cfg, std::vector<ModalityConfig> modalities,
              std::shared_ptr<const FoldContext> ctx, std::uint64_t seed);

  Var predict(Tape& t, const SubjectData& s) override;
  std::vector<ParameterSet*> param_sets() override;

  /// Shared-space tokens for modality mi on this sample (missing-token
  /// substituted when absent): [g_i x d_shared].
  Var projected_tokens(Tape& t, int mi, const SubjectData& s);

  /// Per-modality then shared projection of raw tokens.
  Var project(Tape& t, int mi, Var raw_tokens);

  /// Concatenated fusion vector (pooled blocks, then pair blocks).
  Var fuse(Tape& t, const SubjectData& s);

  int fused_width() const;
  int modality_count() const { return static_cast<int>(encoders_.size()); }
  ModalityEncoder& encoder(int mi);
  ParameterSet& fusion_params() { return fusion_params_; }
  ParameterSet& decoder_params() { return decoder_params_; }
  const FusionConfig& config() const { return cfg_; }
  const FoldContext& context() const { return *ctx_; }
  std::shared_ptr<const FoldContext> context_ptr() const { return ctx_; }

 private:
  FusionConfig cfg_;
  std::vector<ModalityConfig> mod_cfgs_;
  std::shared_ptr<const FoldContext> ctx_;
  std::vector<std::unique_ptr<ModalityEncoder>> encoders_;
  ParameterSet fusion_params_;
  ParameterSet decoder_params_;
  std::vector<int> decoder_dims_;
};

/// Sum of the two directed cross-attentions between two token sequences in
/// shared space, each mean-pooled over its query rows.
Var bimodal_attention(Tape& t, Var tokens_i, Var tokens_j);

/// Algorithm-style width of the fused vector.
int fusion_output_width(int n_modalities, int d_shared, bool with_pairs);

/// Encoder + throwaway pooled-token head, used for per-modality pretraining.
class PretrainModel : public TrainableModel {
 public:
  PretrainModel(ModalityEncoder& enc, std::shared_ptr<const FoldContext> ctx,
                int head_hidden, int n_outputs, TaskKind task,
                std::uint64_t seed);
  Var predict(Tape& t, const SubjectData& s) override;
  std::vector<ParameterSet*> param_sets() override;

 private:
  ModalityEncoder& enc_;
  std::shared_ptr<const FoldContext> ctx_;
  std::vector<int> head_dims_;
  TaskKind task_;
  ParameterSet head_params_;
};

}  // namespace chronofuse
