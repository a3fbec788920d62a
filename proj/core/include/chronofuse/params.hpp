#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "chronofuse/rng.hpp"
#include "chronofuse/tensor.hpp"

namespace chronofuse {

enum class Init {
  kZero,
  kKaimingUniform,  // uniform in +/- sqrt(6 / fan_in), fan_in = first dim product
  kEmbedding,       // normal(0, 0.02)
};

/// Named collection of trainable tensors. Tensors live behind stable
/// pointers (unique_ptr) so optimizer state and tape bindings survive
/// insertion of later parameters. Iteration follows insertion order.
class ParameterSet {
 public:
  explicit ParameterSet(std::uint64_t seed = 0);

  /// Creates (or returns the existing) tensor under `name`. Creation draws
  /// initial values from an RNG derived from the set seed and the name, so
  /// declaration order does not affect initial values.
  Tensor& add(const std::string& name, const std::vector<int>& shape,
              Init init = Init::kKaimingUniform);

  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const;

  std::vector<Tensor*> tensors();            // insertion order
  std::vector<std::string> names() const;    // insertion order
  std::size_t count() const { return order_.size(); }
  std::size_t total_elements() const;

  void zero_grads();
  void copy_values_from(const ParameterSet& other);  // shapes must match

  /// Flat binary round-trip: magic, version, name table, row-major
  /// little-endian f64 payloads. load() restores exact bytes.
  void save(const std::string& path) const;
  void load(const std::string& path);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::map<std::string, std::unique_ptr<Tensor>> by_name_;
  std::vector<std::string> order_;
};

}  // namespace chronofuse
