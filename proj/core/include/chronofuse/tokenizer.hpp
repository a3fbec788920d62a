#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronofuse/records.hpp"

namespace chronofuse {

/// Empirical quantile of a sorted sample with linear interpolation between
/// order statistics (position q * (n - 1)).
double empirical_quantile(const std::vector<double>& sorted_values, double q);

/// Dense index over item ids; the source-token space. Order is sorted
/// lexicographically so the mapping is independent of insertion order.
class ItemVocabulary {
 public:
  ItemVocabulary() = default;
  explicit ItemVocabulary(std::vector<std::string> item_ids);

  int index_of(const std::string& item_id) const;  // VocabularyError if absent
  bool contains(const std::string& item_id) const;
  const std::vector<std::string>& items() const { return items_; }
  int size() const { return static_cast<int>(items_.size()); }

 private:
  std::vector<std::string> items_;
  std::map<std::string, int> index_;
};

/// Per-item quantile cut points fitted on training-split values only.
struct QuantileBinner {
  std::string item_id;
  int bin_count = 0;
  std::vector<double> edges;  // bin_count - 1 nondecreasing interior edges
  std::uint64_t fitted_on = 0;

  /// Bin index = number of edges strictly below the value (bins are
  /// left-closed; out-of-range values land in the edge bins).
  int bin_of(double value) const;
};

QuantileBinner fit_quantile_bins(const std::string& item_id,
                                 std::vector<double> values, int bin_count,
                                 std::uint64_t fitted_on);

struct TokenPair {
  int value_token = 0;
  int source_token = 0;
  bool operator==(const TokenPair&) const = default;
  bool operator<(const TokenPair& o) const {
    return source_token != o.source_token ? source_token < o.source_token
                                          : value_token < o.value_token;
  }
};

/// All fitted binners for one training split, plus the vocabulary that
/// lays value tokens out in per-item blocks of `bin_count` each.
class BinnerSet {
 public:
  BinnerSet() = default;
  BinnerSet(ItemVocabulary vocab, int bin_count, std::uint64_t fitted_on);

  /// Fits one binner per item appearing in `observations` (numeric values
  /// only). Every observation's subject must be in `train_members`;
  /// violations raise LeakError.
  static BinnerSet fit(const std::vector<TimedObservation>& observations,
                       const ItemVocabulary& vocab, int bin_count,
                       std::uint64_t fingerprint,
                       const std::vector<std::string>& train_members);

  /// Numeric values go through the item's quantile bins; categorical values
  /// pass their id through inside the same per-item block.
  TokenPair tokenize(const TimedObservation& obs) const;

  const ItemVocabulary& vocab() const { return vocab_; }
  int bin_count() const { return bin_count_; }
  int value_vocab_size() const { return vocab_.size() * bin_count_; }
  std::uint64_t fitted_on() const { return fitted_on_; }
  const QuantileBinner& binner(const std::string& item_id) const;
  bool has_binner(const std::string& item_id) const;

  /// Raises LeakError unless the fingerprint this set was fitted on matches
  /// the split the caller is about to use it with.
  void verify_fingerprint(std::uint64_t expected) const;

  void save(const std::string& path) const;
  static BinnerSet load(const std::string& path);

 private:
  ItemVocabulary vocab_;
  int bin_count_ = 0;
  std::uint64_t fitted_on_ = 0;
  std::map<std::string, QuantileBinner> binners_;
};

}  // namespace chronofuse
