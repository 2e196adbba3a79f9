#include "nmatch/weights.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace nmatch {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("NMW1: truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("NMW1: truncated file");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void save_nmw(const std::string& path,
              const std::vector<std::pair<std::string, Tensor>>& tensors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write("NMW1", 4);
  put_u32(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(os, static_cast<uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d)
      put_u32(os, static_cast<uint32_t>(t.extent(d)));
    for (double v : t.data()) put_f64(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_nmw(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "NMW1", 4) != 0)
    throw std::runtime_error("not an NMW1 weight file: " + path);
  uint32_t count = get_u32(is);
  std::vector<std::pair<std::string, Tensor>> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t nl = get_u32(is);
    std::string name(nl, '\0');
    is.read(name.data(), nl);
    if (!is) throw std::runtime_error("NMW1: truncated file");
    uint32_t rank = get_u32(is);
    Shape shape(rank);
    for (uint32_t d = 0; d < rank; ++d)
      shape[d] = static_cast<int>(get_u32(is));
    std::vector<double> data(numel(shape));
    for (auto& v : data) v = get_f64(is);
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

Tensor ParamStore::insert(const std::string& name, Tensor t) {
  if (by_name_.count(name))
    throw std::invalid_argument("duplicate parameter name: " + name);
  t.set_requires_grad(true);
  by_name_[name] = static_cast<int>(ordered_.size());
  ordered_.push_back(t);
  names_.push_back(name);
  return t;
}

Tensor ParamStore::create(const std::string& name, Shape shape, int fan_in,
                          int fan_out) {
  Tensor t(shape);
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& v : t.data()) v = rng_.uniform(-bound, bound);
  return insert(name, std::move(t));
}

Tensor ParamStore::create_zeros(const std::string& name, Shape shape) {
  return insert(name, Tensor(std::move(shape)));
}

Tensor ParamStore::create_const(const std::string& name, Shape shape,
                                double v) {
  return insert(name, Tensor::full(std::move(shape), v));
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end())
    throw std::runtime_error("missing parameter tensor: " + name);
  return ordered_[it->second];
}

std::vector<Tensor> ParamStore::with_prefix(const std::string& prefix) const {
  std::vector<Tensor> out;
  for (size_t i = 0; i < ordered_.size(); ++i)
    if (names_[i].rfind(prefix, 0) == 0) out.push_back(ordered_[i]);
  return out;
}

long ParamStore::total_parameters() const {
  long n = 0;
  for (const auto& t : ordered_) n += t.size();
  return n;
}

void ParamStore::save(const std::string& path) const {
  std::vector<std::pair<std::string, Tensor>> pairs;
  for (size_t i = 0; i < ordered_.size(); ++i)
    pairs.emplace_back(names_[i], ordered_[i]);
  save_nmw(path, pairs);
}

void ParamStore::load(const std::string& path) {
  for (auto& [name, t] : load_nmw(path)) {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) {
      insert(name, std::move(t));
    } else {
      Tensor& dst = ordered_[it->second];
      if (dst.shape() != t.shape())
        throw std::runtime_error("weight shape mismatch for " + name + ": " +
                                 shape_str(dst.shape()) + " vs " +
                                 shape_str(t.shape()));
      dst.data() = t.data();
    }
  }
}

}  // namespace nmatch
