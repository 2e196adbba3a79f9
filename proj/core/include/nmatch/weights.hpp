#pragma once

#include <map>
#include <string>
#include <vector>

#include "nmatch/rng.hpp"
#include "nmatch/tensor.hpp"

namespace nmatch {

// Named parameter tensors, created in declaration order. Initialization is
// uniform in +/- sqrt(6/(fan_in+fan_out)) drawn from the store's Rng, so a
// fixed seed gives a fixed model.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed = 0) : rng_(seed, "params") {}

  Tensor create(const std::string& name, Shape shape, int fan_in, int fan_out);
  Tensor create_zeros(const std::string& name, Shape shape);
  Tensor create_const(const std::string& name, Shape shape, double v);

  bool has(const std::string& name) const { return by_name_.count(name) > 0; }
  Tensor get(const std::string& name) const;
  const std::vector<Tensor>& all() const { return ordered_; }
  std::vector<Tensor> with_prefix(const std::string& prefix) const;
  long total_parameters() const;

  void save(const std::string& path) const;
  // Loads tensors from an NMW1 file. Tensors already present must match
  // shapes and are overwritten; unknown names are added.
  void load(const std::string& path);

 private:
  Tensor insert(const std::string& name, Tensor t);
  Rng rng_;
  std::vector<Tensor> ordered_;
  std::vector<std::string> names_;
  std::map<std::string, int> by_name_;
};

// Raw NMW1 file i/o (magic "NMW1", little-endian u32 count, then per tensor:
// u32 name length, name bytes, u32 rank, u32 extents, f64 data).
void save_nmw(const std::string& path,
              const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_nmw(const std::string& path);

}  // namespace nmatch
