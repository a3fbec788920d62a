#include "chronofuse/sparse_encoder.hpp"

#include <algorithm>

#include "chronofuse/errors.hpp"

namespace chronofuse {

WindowedTokenSet assign_and_accumulate(
    const std::vector<TimedObservation>& observations,
    const TimeWindowScheme& scheme, const BinnerSet& binners,
    double anchor_timestamp) {
  const int count = scheme.window_count();
  if (count < 1) throw SchemeError("scheme has no windows");
  std::vector<std::vector<TokenPair>> fresh(static_cast<std::size_t>(count));
  for (const TimedObservation& obs : observations) {
    const double dt = scheme.dt_of(obs.timestamp, anchor_timestamp);
    const int w = scheme.window_of(dt);
    fresh[static_cast<std::size_t>(w)].push_back(binners.tokenize(obs));
  }
  WindowedTokenSet out;
  out.windows.resize(static_cast<std::size_t>(count));
  std::vector<TokenPair> acc;
  for (int k = 0; k < count; ++k) {
    acc.insert(acc.end(), fresh[static_cast<std::size_t>(k)].begin(),
               fresh[static_cast<std::size_t>(k)].end());
    std::vector<TokenPair> window = acc;
    std::sort(window.begin(), window.end());
    out.windows[static_cast<std::size_t>(k)] = std::move(window);
  }
  return out;
}

Tensor embed_window(const std::vector<TokenPair>& tokens,
                    const Tensor& value_table, const Tensor& source_table) {
  if (tokens.empty())
    throw ContractError("embed_window: empty token list (empty-window policy "
                        "belongs to the caller)");
  Tape t;
  Var vt = t.value(value_table);
  Var st = t.value(source_table);
  std::vector<int> value_ids, source_ids;
  value_ids.reserve(tokens.size());
  source_ids.reserve(tokens.size());
  for (const TokenPair& tp : tokens) {
    value_ids.push_back(tp.value_token);
    source_ids.push_back(tp.source_token);
  }
  Var prod = t.mul(t.rows(vt, value_ids), t.rows(st, source_ids));
  return t.val(t.mean_rows(prod));
}

SparseEncoder::SparseEncoder(SparseEncoderConfig cfg, std::uint64_t seed)
    : cfg_(cfg), params_(seed) {
  if (cfg_.n_items < 1 || cfg_.bins < 2 || cfg_.embed_dim < 1 ||
      cfg_.hidden < 1 || cfg_.window_count < 1)
    throw ConfigError("sparse encoder config has nonpositive extents");
  params_.add("value_table", {cfg_.value_vocab(), cfg_.embed_dim},
              Init::kEmbedding);
  params_.add("source_table", {cfg_.n_items, cfg_.embed_dim},
              Init::kEmbedding);
  declare_bilstm(params_, "bilstm", cfg_.embed_dim, cfg_.hidden);
}

SparseEncoder::Forward SparseEncoder::forward(
    Tape& t, const WindowedTokenSet& windows) const {
  if (windows.window_count() != cfg_.window_count)
    throw DimensionError("window count " +
                         std::to_string(windows.window_count()) +
                         " does not match configured " +
                         std::to_string(cfg_.window_count));
  Var vt = t.param(params_.get("value_table"));
  Var st = t.param(params_.get("source_table"));
  std::vector<Var> rows(static_cast<std::size_t>(cfg_.window_count));
  for (int k = 0; k < cfg_.window_count; ++k) {
    const std::vector<TokenPair>& toks =
        windows.windows[static_cast<std::size_t>(k)];
    if (toks.empty()) {
      rows[static_cast<std::size_t>(k)] = t.value(Tensor({cfg_.embed_dim}));
      continue;
    }
    std::vector<int> value_ids, source_ids;
    value_ids.reserve(toks.size());
    source_ids.reserve(toks.size());
    for (const TokenPair& tp : toks) {
      if (tp.value_token < 0 || tp.value_token >= cfg_.value_vocab())
        throw VocabularyError("value token " + std::to_string(tp.value_token) +
                              " outside vocabulary of size " +
                              std::to_string(cfg_.value_vocab()));
      if (tp.source_token < 0 || tp.source_token >= cfg_.n_items)
        throw VocabularyError("source token " +
                              std::to_string(tp.source_token) +
                              " outside vocabulary of size " +
                              std::to_string(cfg_.n_items));
      value_ids.push_back(tp.value_token);
      source_ids.push_back(tp.source_token);
    }
    Var prod = t.mul(t.rows(vt, value_ids), t.rows(st, source_ids));
    rows[static_cast<std::size_t>(k)] = t.mean_rows(prod);
  }
  Forward f;
  f.window_embs = t.stack_rows(rows);
  BiLstmOut lstm = bilstm_forward(t, params_, "bilstm", f.window_embs,
                                  cfg_.hidden);
  f.tokens = lstm.per_step;
  f.summary = lstm.summary;
  return f;
}

SparseSeriesEmbedding encode_sparse_series(
    const std::vector<TimedObservation>& observations,
    const TimeWindowScheme& scheme, const BinnerSet& binners,
    double anchor_timestamp, const SparseEncoder& encoder) {
  WindowedTokenSet windows =
      assign_and_accumulate(observations, scheme, binners, anchor_timestamp);
  Tape t;
  SparseEncoder::Forward f = encoder.forward(t, windows);
  SparseSeriesEmbedding out;
  out.window_embeddings = t.val(f.window_embs);
  out.summary = t.val(f.summary);
  return out;
}

}  // namespace chronofuse
