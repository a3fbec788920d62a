#include "chronofuse/tokenizer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "chronofuse/errors.hpp"

namespace chronofuse {

double empirical_quantile(const std::vector<double>& sorted_values, double q) {
  if (sorted_values.empty())
    throw FitError("empirical_quantile: empty sample");
  if (q < 0.0 || q > 1.0)
    throw ContractError("empirical_quantile: q outside [0,1]");
  const std::size_t n = sorted_values.size();
  if (n == 1) return sorted_values[0];
  const double pos = q * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= n) return sorted_values[n - 1];
  const double frac = pos - static_cast<double>(lo);
  return sorted_values[lo] + frac * (sorted_values[lo + 1] - sorted_values[lo]);
}

ItemVocabulary::ItemVocabulary(std::vector<std::string> item_ids) {
  std::sort(item_ids.begin(), item_ids.end());
  item_ids.erase(std::unique(item_ids.begin(), item_ids.end()),
                 item_ids.end());
  items_ = std::move(item_ids);
  for (std::size_t i = 0; i < items_.size(); ++i)
    index_[items_[i]] = static_cast<int>(i);
}

int ItemVocabulary::index_of(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end())
    throw VocabularyError("unknown item '" + item_id + "'");
  return it->second;
}

bool ItemVocabulary::contains(const std::string& item_id) const {
  return index_.count(item_id) != 0;
}

int QuantileBinner::bin_of(double value) const {
  int bin = 0;
  for (double e : edges)
    if (e < value) ++bin;
  return bin;
}

QuantileBinner fit_quantile_bins(const std::string& item_id,
                                 std::vector<double> values, int bin_count,
                                 std::uint64_t fitted_on) {
  if (values.empty())
    throw FitError("no training values for item '" + item_id + "'");
  if (bin_count < 2)
    throw ConfigError("bin count must be >= 2, got " +
                      std::to_string(bin_count));
  std::sort(values.begin(), values.end());
  QuantileBinner b;
  b.item_id = item_id;
  b.bin_count = bin_count;
  b.fitted_on = fitted_on;
  b.edges.reserve(static_cast<std::size_t>(bin_count - 1));
  for (int k = 1; k < bin_count; ++k)
    b.edges.push_back(
        empirical_quantile(values, static_cast<double>(k) / bin_count));
  return b;
}

BinnerSet::BinnerSet(ItemVocabulary vocab, int bin_count,
                     std::uint64_t fitted_on)
    : vocab_(std::move(vocab)), bin_count_(bin_count), fitted_on_(fitted_on) {}

BinnerSet BinnerSet::fit(const std::vector<TimedObservation>& observations,
                         const ItemVocabulary& vocab, int bin_count,
                         std::uint64_t fingerprint,
                         const std::vector<std::string>& train_members) {
  std::set<std::string> members(train_members.begin(), train_members.end());
  std::map<std::string, std::vector<double>> by_item;
  for (const TimedObservation& obs : observations) {
    if (!members.count(obs.subject_id))
      throw LeakError("binner fit saw subject '" + obs.subject_id +
                      "' outside the training split");
    if (obs.categorical) continue;
    by_item[obs.item_id].push_back(obs.value);
  }
  BinnerSet set(vocab, bin_count, fingerprint);
  for (auto& [item, values] : by_item) {
    vocab.index_of(item);  // unknown items are a vocabulary error
    set.binners_.emplace(
        item, fit_quantile_bins(item, std::move(values), bin_count,
                                fingerprint));
  }
  return set;
}

TokenPair BinnerSet::tokenize(const TimedObservation& obs) const {
  const int item_idx = vocab_.index_of(obs.item_id);
  TokenPair tp;
  tp.source_token = item_idx;
  if (obs.categorical) {
    if (obs.category < 0 || obs.category >= bin_count_)
      throw VocabularyError("categorical id " + std::to_string(obs.category) +
                            " outside block of size " +
                            std::to_string(bin_count_) + " for item '" +
                            obs.item_id + "'");
    tp.value_token = item_idx * bin_count_ + obs.category;
    return tp;
  }
  auto it = binners_.find(obs.item_id);
  if (it == binners_.end())
    throw VocabularyError("no fitted bins for item '" + obs.item_id + "'");
  tp.value_token = item_idx * bin_count_ + it->second.bin_of(obs.value);
  return tp;
}

const QuantileBinner& BinnerSet::binner(const std::string& item_id) const {
  auto it = binners_.find(item_id);
  if (it == binners_.end())
    throw VocabularyError("no fitted bins for item '" + item_id + "'");
  return it->second;
}

bool BinnerSet::has_binner(const std::string& item_id) const {
  return binners_.count(item_id) != 0;
}

void BinnerSet::verify_fingerprint(std::uint64_t expected) const {
  if (fitted_on_ != expected)
    throw LeakError("binner set fitted on split " + std::to_string(fitted_on_) +
                    " used with split " + std::to_string(expected));
}

void BinnerSet::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "binners v1\n";
  os << "bins " << bin_count_ << "\n";
  os << "fitted_on " << fitted_on_ << "\n";
  os << "items " << vocab_.size() << "\n";
  for (const std::string& item : vocab_.items()) os << item << "\n";
  os << "fitted " << binners_.size() << "\n";
  os << std::hexfloat;
  for (const auto& [item, b] : binners_) {
    os << item << " " << b.edges.size();
    for (double e : b.edges) os << " " << e;
    os << "\n";
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

BinnerSet BinnerSet::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::string header;
  std::getline(is, header);
  if (header != "binners v1")
    throw MigrationError("unsupported binner file header '" + header + "'");
  std::string key;
  int bins = 0;
  std::uint64_t fitted_on = 0;
  int n_items = 0;
  if (!(is >> key >> bins) || key != "bins")
    throw ParseError("binner file: expected 'bins'");
  if (!(is >> key >> fitted_on) || key != "fitted_on")
    throw ParseError("binner file: expected 'fitted_on'");
  if (!(is >> key >> n_items) || key != "items")
    throw ParseError("binner file: expected 'items'");
  std::vector<std::string> items(static_cast<std::size_t>(n_items));
  for (std::string& item : items)
    if (!(is >> item)) throw ParseError("binner file: truncated item list");
  int n_fitted = 0;
  if (!(is >> key >> n_fitted) || key != "fitted")
    throw ParseError("binner file: expected 'fitted'");
  BinnerSet set(ItemVocabulary(items), bins, fitted_on);
  for (int i = 0; i < n_fitted; ++i) {
    std::string item;
    std::size_t n_edges = 0;
    if (!(is >> item >> n_edges))
      throw ParseError("binner file: truncated binner record");
    QuantileBinner b;
    b.item_id = item;
    b.bin_count = bins;
    b.fitted_on = fitted_on;
    b.edges.resize(n_edges);
    for (double& e : b.edges) {
      std::string tok;
      if (!(is >> tok)) throw ParseError("binner file: truncated edges");
      e = std::strtod(tok.c_str(), nullptr);
    }
    set.binners_.emplace(item, std::move(b));
  }
  return set;
}

}  // namespace chronofuse
