#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "abm/nn/tensor.hpp"

namespace abm::nn {

using GradMap = std::map<std::string, Tensor>;

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  long step = 0;
};

/// Named parameters with their Adam state. Names are unique; iteration
/// order is lexicographic and therefore stable.
class ParameterStore {
 public:
  struct Entry {
    Tensor value;
    AdamState adam;
  };

  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Tensor& get(const std::string& name) const;
  Tensor& get_mutable(const std::string& name);
  const AdamState& adam_state(const std::string& name) const;
  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

  /// Values only; optimizer state is ignored.
  bool same_values(const ParameterStore& other) const;

 private:
  std::map<std::string, Entry> entries_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update for every parameter that has an entry in
/// `grads`; parameters without a gradient keep their value and state.
void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& config);

/// Deterministic generator for initialization and sampling. Uniform draws
/// use the top 53 bits so results do not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Integer in [lo, hi].
  long integer(long lo, long hi);
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Kaiming-uniform in +-sqrt(6 / fan_in).
Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng);

/// Adds "<prefix>.weight" [K,C,k,k] (Kaiming) and "<prefix>.bias" [K] (zero).
void add_conv_params(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                     std::size_t out_channels, std::size_t kernel, Rng& rng);

/// Adds "<prefix>.weight" [D,M] (Kaiming) and "<prefix>.bias" [M] (zero).
void add_dense_params(ParameterStore& store, const std::string& prefix, std::size_t in_features,
                      std::size_t out_features, Rng& rng);

/// Checkpoint file: a plain-text manifest followed by one ABMF blob per
/// parameter.
///
///   ABMCKPT 1
///   <count>
///   <name> <rank> <dim>... <byte offset>      (one line per parameter)
///   END
///   <ABMF blobs, offsets relative to the first byte after "END\n">
///
/// Values are stored as float32; loading a saved store and saving it again
/// reproduces the file byte for byte.
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store);
ParameterStore load_checkpoint(const std::filesystem::path& path);

/// Round every parameter to float32, the precision a checkpoint holds.
void round_to_float(ParameterStore& store);

}  // namespace abm::nn
