#include "nmatch/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nmatch {

PipelineConfig PipelineConfig::desk() { return PipelineConfig{}; }

PipelineConfig PipelineConfig::paper() {
  PipelineConfig c;
  c.image_size = 512;
  c.c_coarse = 256;
  c.c_fine = 128;
  return c;
}

void PipelineConfig::validate() const {
  if (image_size < 8 || image_size % 8 != 0)
    throw std::invalid_argument("image_size must be a positive multiple of 8");
  if (c_coarse < 4 || c_coarse % 4 != 0)
    throw std::invalid_argument("c_coarse must be divisible by 4");
  if (c_fine < 1) throw std::invalid_argument("c_fine must be positive");
  if (layers_coarse < 1 || layers_fine < 1)
    throw std::invalid_argument("layer counts must be >= 1");
  if (heads < 1 || c_coarse % heads != 0 || c_fine % heads != 0)
    throw std::invalid_argument("heads must divide both channel counts");
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("window must be odd and >= 3");
  if (tau_score <= 0) throw std::invalid_argument("tau_score must be positive");
  if (tau_confidence < 0 || tau_confidence > 1)
    throw std::invalid_argument("tau_confidence must lie in [0,1]");
}

namespace {

int to_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  int out;
  try {
    out = std::stoi(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key);
  }
  if (used != v.size())
    throw std::invalid_argument("config: bad integer for " + key);
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  size_t used = 0;
  double out;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key);
  }
  if (used != v.size())
    throw std::invalid_argument("config: bad number for " + key);
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for " + key);
}

}  // namespace

PipelineConfig parse_config(const std::map<std::string, std::string>& kv) {
  PipelineConfig c;
  auto it = kv.find("profile");
  if (it != kv.end()) {
    if (it->second == "desk")
      c = PipelineConfig::desk();
    else if (it->second == "paper")
      c = PipelineConfig::paper();
    else
      throw std::invalid_argument("config: unknown profile " + it->second);
  }
  for (const auto& [key, value] : kv) {
    if (key == "profile") continue;
    if (key == "image_size")
      c.image_size = to_int(key, value);
    else if (key == "c_coarse")
      c.c_coarse = to_int(key, value);
    else if (key == "c_fine")
      c.c_fine = to_int(key, value);
    else if (key == "layers_coarse")
      c.layers_coarse = to_int(key, value);
    else if (key == "layers_fine")
      c.layers_fine = to_int(key, value);
    else if (key == "heads")
      c.heads = to_int(key, value);
    else if (key == "window")
      c.window = to_int(key, value);
    else if (key == "tau_score")
      c.tau_score = to_double(key, value);
    else if (key == "tau_confidence")
      c.tau_confidence = to_double(key, value);
    else if (key == "use_fpm")
      c.use_fpm = to_bool(key, value);
    else if (key == "pe_mode") {
      if (value == "normalized")
        c.pe_mode = PeMode::Normalized;
      else if (value == "absolute")
        c.pe_mode = PeMode::Absolute;
      else
        throw std::invalid_argument("config: pe_mode must be normalized|absolute");
    } else if (key == "outlier_mode") {
      if (value == "learned")
        c.outlier_mode = OutlierMode::Learned;
      else if (value == "consensus")
        c.outlier_mode = OutlierMode::Consensus;
      else
        throw std::invalid_argument("config: outlier_mode must be learned|consensus");
    } else if (key == "seed")
      c.seed = static_cast<uint64_t>(std::stoull(value));
    else
      throw std::invalid_argument("config: unknown key " + key);
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    if (!kv.emplace(key, value).second)
      throw std::invalid_argument("config: duplicate key " + key);
  }
  return parse_config(kv);
}

}  // namespace nmatch
