#include "chronofuse/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "chronofuse/errors.hpp"

namespace chronofuse {

namespace {

constexpr std::uint64_t kMagic = 0x43464E5041524D31ull;  // "CFNPARM1"
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(os, bits);
}

double get_f64(std::istream& is) {
  const std::uint64_t bits = get_u64(is);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

}  // namespace

ParameterSet::ParameterSet(std::uint64_t seed) : seed_(seed) {}

Tensor& ParameterSet::add(const std::string& name,
                          const std::vector<int>& shape, Init init) {
  auto it = by_name_.find(name);
  if (it != by_name_.end()) {
    if (it->second->shape != shape)
      throw DimensionError("parameter '" + name + "' re-declared with shape " +
                           Tensor(shape).shape_str() + " but exists as " +
                           it->second->shape_str());
    return *it->second;
  }
  auto t = std::make_unique<Tensor>(shape);
  Rng rng(hash_combine(seed_, hash_str(name)));
  switch (init) {
    case Init::kZero:
      break;
    case Init::kKaimingUniform: {
      long long fan_in = 1;
      for (std::size_t i = 0; i + 1 < shape.size(); ++i) fan_in *= shape[i];
      if (shape.size() <= 1) fan_in = shape.empty() ? 1 : shape[0];
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (double& x : t->data) x = rng.uniform(-bound, bound);
      break;
    }
    case Init::kEmbedding:
      for (double& x : t->data) x = 0.02 * rng.normal();
      break;
  }
  Tensor& ref = *t;
  by_name_.emplace(name, std::move(t));
  order_.push_back(name);
  return ref;
}

Tensor& ParameterSet::get(const std::string& name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw IndexError("parameter '" + name + "' not found");
  return *it->second;
}

const Tensor& ParameterSet::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw IndexError("parameter '" + name + "' not found");
  return *it->second;
}

bool ParameterSet::has(const std::string& name) const {
  return by_name_.count(name) != 0;
}

std::vector<Tensor*> ParameterSet::tensors() {
  std::vector<Tensor*> out;
  out.reserve(order_.size());
  for (const std::string& n : order_) out.push_back(by_name_.at(n).get());
  return out;
}

std::vector<std::string> ParameterSet::names() const { return order_; }

std::size_t ParameterSet::total_elements() const {
  std::size_t n = 0;
  for (const auto& [name, t] : by_name_) n += t->data.size();
  return n;
}

void ParameterSet::zero_grads() {
  for (const std::string& n : order_) by_name_.at(n)->zero_grad();
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.order_.size() != order_.size())
    throw DimensionError("copy_values_from: parameter count mismatch");
  for (const std::string& n : order_) {
    auto it = other.by_name_.find(n);
    if (it == other.by_name_.end())
      throw IndexError("copy_values_from: missing parameter '" + n + "'");
    Tensor& dst = *by_name_.at(n);
    if (!dst.same_shape(*it->second))
      throw DimensionError("copy_values_from: shape mismatch for '" + n + "'");
    dst.data = it->second->data;
  }
}

void ParameterSet::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  put_u64(os, kMagic);
  put_u32(os, kVersion);
  put_u64(os, seed_);
  put_u32(os, static_cast<std::uint32_t>(order_.size()));
  for (const std::string& n : order_) {
    const Tensor& t = *by_name_.at(n);
    put_u32(os, static_cast<std::uint32_t>(n.size()));
    os.write(n.data(), static_cast<std::streamsize>(n.size()));
    put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
    for (double x : t.data) put_f64(os, x);
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

void ParameterSet::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  if (get_u64(is) != kMagic)
    throw ParseError("'" + path + "' is not a parameter file");
  const std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw MigrationError("parameter file version " + std::to_string(version) +
                         " unsupported (expected " + std::to_string(kVersion) +
                         ")");
  seed_ = get_u64(is);
  const std::uint32_t count = get_u32(is);
  std::map<std::string, std::unique_ptr<Tensor>> loaded;
  std::vector<std::string> order;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t nlen = get_u32(is);
    std::string name(nlen, '\0');
    is.read(name.data(), nlen);
    const std::uint32_t rank = get_u32(is);
    std::vector<int> shape(rank);
    for (std::uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<int>(get_u32(is));
    auto t = std::make_unique<Tensor>(shape);
    for (double& x : t->data) x = get_f64(is);
    if (!is) throw ParseError("truncated parameter file '" + path + "'");
    loaded.emplace(name, std::move(t));
    order.push_back(name);
  }
  if (!by_name_.empty()) {
    // In-place load into an already-declared set: shapes must agree so tape
    // bindings and optimizer state stay valid.
    for (const std::string& n : order_) {
      auto it = loaded.find(n);
      if (it == loaded.end())
        throw ParseError("parameter file '" + path + "' missing '" + n + "'");
      Tensor& dst = *by_name_.at(n);
      if (!dst.same_shape(*it->second))
        throw DimensionError("parameter '" + n + "' shape mismatch on load");
      dst.data = it->second->data;
      dst.grad.clear();
    }
    return;
  }
  by_name_ = std::move(loaded);
  order_ = std::move(order);
}

}  // namespace chronofuse
