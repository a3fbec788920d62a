#pragma once

#include <vector>

#include "chronofuse/nn.hpp"
#include "chronofuse/records.hpp"
#include "chronofuse/windows.hpp"

namespace chronofuse {

/// Micro/macro output of a hierarchical path: per-window embeddings plus one
/// macro vector summarizing the whole window sequence.
struct HierEmbedding {
  Tensor micro;  // [window_count x d]
  Tensor macro;  // [d]
};

struct EcgEncoderConfig {
  int leads = 12;
  int samples = 625;
  int n_features = 4;
  int text_vocab = 143;
  int d_model = 16;        // record, text, feature, micro and macro width
  int hf_stem_ch = 8;
  int hf_stem_kernel = 7;
  int hf_stem_stride = 5;
  int hf_blocks = 2;
  int hf_block_stride = 2;
  int lf_channels = 8;
  int lf_kernel = 3;
  int lf_blocks = 2;
};

/// Per-record encoder (signal conv stack, text embedding, feature MLP,
/// concat+linear+ReLU record fusion) plus the low-frequency encoder over the
/// quantile-window sequence of record embeddings.
class EcgEncoder {
 public:
  EcgEncoder(EcgEncoderConfig cfg, std::uint64_t seed);

  Var encode_signal(Tape& t, const Tensor& signal) const;        // [d_model]
  Var encode_text(Tape& t, const std::vector<int>& tokens) const;
  Var encode_features(Tape& t, const std::vector<double>& f) const;
  Var fuse_record(Tape& t, Var signal_emb, Var text_emb, Var feature_emb) const;
  Var encode_record(Tape& t, const EcgRecord& rec) const;

  struct Forward {
    Var micro;   // [window_count x d_model]
    Var macro;   // [d_model]
    Var tokens;  // [(window_count + 1) x d_model] = micro rows ++ macro
  };

  /// Records are bucketed into the scheme's windows by their timestamps,
  /// mean-pooled per window (empty window -> zero row), then the window
  /// sequence runs through the low-frequency conv stack. Zero records is
  /// legal and yields the all-zero-window output.
  Forward forward(Tape& t, const std::vector<EcgRecord>& records,
                  const TimeWindowScheme& scheme, double anchor_timestamp) const;

  HierEmbedding encode_timeline(const std::vector<EcgRecord>& records,
                                const TimeWindowScheme& scheme,
                                double anchor_timestamp) const;

  const EcgEncoderConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  EcgEncoderConfig cfg_;
  mutable ParameterSet params_;
};

}  // namespace chronofuse
