#pragma once

#include <string>
#include <vector>

#include "chronofuse/nn.hpp"
#include "chronofuse/records.hpp"
#include "chronofuse/tokenizer.hpp"
#include "chronofuse/windows.hpp"

namespace chronofuse {

/// Token content per time window after cumulative accumulation. Windows are
/// chronological (0 = oldest); window k holds every token from windows <= k,
/// so later windows only ever grow. Within a window tokens sit in canonical
/// (source, value) order, which fixes the summation order downstream.
struct WindowedTokenSet {
  std::vector<std::vector<TokenPair>> windows;

  int window_count() const { return static_cast<int>(windows.size()); }
};

WindowedTokenSet assign_and_accumulate(
    const std::vector<TimedObservation>& observations,
    const TimeWindowScheme& scheme, const BinnerSet& binners,
    double anchor_timestamp);

/// Mean over pairs of value-embedding ⊙ source-embedding. Token list must be
/// nonempty; the empty-window policy (zero vector) lives in the caller.
Tensor embed_window(const std::vector<TokenPair>& tokens,
                    const Tensor& value_table, const Tensor& source_table);

struct SparseEncoderConfig {
  int n_items = 0;
  int bins = 16;
  int embed_dim = 16;
  int hidden = 16;
  int window_count = 0;

  int value_vocab() const { return n_items * bins; }
  int token_dim() const { return 2 * hidden; }  // width of fusion tokens
};

/// Value/source embedding tables plus the BiLSTM head over the cumulative
/// window sequence.
class SparseEncoder {
 public:
  SparseEncoder(SparseEncoderConfig cfg, std::uint64_t seed);

  struct Forward {
    Var window_embs;  // [window_count x embed_dim]
    Var tokens;       // [window_count x 2*hidden], BiLSTM per-step outputs
    Var summary;      // [2*hidden]
  };

  Forward forward(Tape& t, const WindowedTokenSet& windows) const;

  const SparseEncoderConfig& config() const { return cfg_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

 private:
  SparseEncoderConfig cfg_;
  mutable ParameterSet params_;
};

struct SparseSeriesEmbedding {
  Tensor window_embeddings;  // [window_count x embed_dim]
  Tensor summary;            // [2*hidden]
};

/// Untraced convenience wrapper: tokenize + window + embed + BiLSTM in one
/// call, returning plain tensors.
SparseSeriesEmbedding encode_sparse_series(
    const std::vector<TimedObservation>& observations,
    const TimeWindowScheme& scheme, const BinnerSet& binners,
    double anchor_timestamp, const SparseEncoder& encoder);

}  // namespace chronofuse
