#include "abm/nn/params.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "abm/image_io.hpp"

namespace abm::nn {

void ParameterStore::add(const std::string& name, Tensor value) {
  if (entries_.count(name)) throw Error("duplicate parameter name: " + name);
  Entry e;
  e.adam.first_moment = Tensor(value.shape());
  e.adam.second_moment = Tensor(value.shape());
  e.value = std::move(value);
  entries_.emplace(name, std::move(e));
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second.value;
}

Tensor& ParameterStore::get_mutable(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second.value;
}

const AdamState& ParameterStore::adam_state(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw Error("unknown parameter: " + name);
  return it->second.adam;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (const auto& [name, e] : entries_) {
    auto it = other.entries_.find(name);
    if (it == other.entries_.end() || !(it->second.value == e.value)) return false;
  }
  return true;
}

void adam_step(ParameterStore& store, const GradMap& grads, const AdamConfig& config) {
  for (auto& [name, entry] : store.entries()) {
    auto it = grads.find(name);
    if (it == grads.end()) continue;
    const Tensor& g = it->second;
    if (g.shape() != entry.value.shape()) {
      throw ShapeError("gradient for " + name + " has shape " + shape_string(g.shape()));
    }
    AdamState& s = entry.adam;
    ++s.step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(s.step));
    for (std::size_t i = 0; i < g.size(); ++i) {
      s.first_moment[i] = config.beta1 * s.first_moment[i] + (1.0 - config.beta1) * g[i];
      s.second_moment[i] = config.beta2 * s.second_moment[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double m_hat = s.first_moment[i] / c1;
      const double v_hat = s.second_moment[i] / c2;
      entry.value[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
  }
}

long Rng::integer(long lo, long hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<long>(engine_() % span);
}

Tensor kaiming_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

void add_conv_params(ParameterStore& store, const std::string& prefix, std::size_t in_channels,
                     std::size_t out_channels, std::size_t kernel, Rng& rng) {
  store.add(prefix + ".weight", kaiming_uniform({out_channels, in_channels, kernel, kernel},
                                                in_channels * kernel * kernel, rng));
  store.add(prefix + ".bias", Tensor({out_channels}));
}

void add_dense_params(ParameterStore& store, const std::string& prefix, std::size_t in_features,
                      std::size_t out_features, Rng& rng) {
  store.add(prefix + ".weight", kaiming_uniform({in_features, out_features}, in_features, rng));
  store.add(prefix + ".bias", Tensor({out_features}));
}

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store) {
  std::ostringstream blobs(std::ios::binary);
  std::ostringstream manifest;
  manifest << "ABMCKPT 1\n" << store.size() << "\n";
  for (const auto& [name, e] : store.entries()) {
    if (name.find_first_of(" \t\n") != std::string::npos) {
      throw Error("parameter name contains whitespace: " + name);
    }
    const auto offset = static_cast<std::size_t>(blobs.tellp());
    std::vector<std::uint32_t> dims(e.value.shape().begin(), e.value.shape().end());
    std::vector<float> values(e.value.data().begin(), e.value.data().end());
    write_abmf(blobs, dims, values);
    manifest << name << " " << dims.size();
    for (auto d : dims) manifest << " " << d;
    manifest << " " << offset << "\n";
  }
  manifest << "END\n";
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  const std::string head = manifest.str();
  const std::string body = blobs.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing checkpoint " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "ABMCKPT 1") throw InputError("not a checkpoint: " + path.string());
  std::getline(in, line);
  const std::size_t count = std::stoul(line);
  struct Item {
    std::string name;
    Shape shape;
    std::size_t offset;
  };
  std::vector<Item> items;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) throw InputError("truncated checkpoint manifest");
    std::istringstream ls(line);
    Item item;
    std::size_t rank = 0;
    ls >> item.name >> rank;
    item.shape.resize(rank);
    for (auto& d : item.shape) ls >> d;
    ls >> item.offset;
    if (!ls) throw InputError("malformed checkpoint manifest line: " + line);
    items.push_back(std::move(item));
  }
  if (!std::getline(in, line) || line != "END") throw InputError("checkpoint manifest missing END");
  const auto body_start = in.tellg();
  ParameterStore store;
  for (const auto& item : items) {
    in.seekg(body_start + static_cast<std::streamoff>(item.offset));
    FloatTensorFile blob = read_abmf(in);
    Shape shape(blob.dims.begin(), blob.dims.end());
    if (shape != item.shape) throw InputError("checkpoint shape mismatch for " + item.name);
    store.add(item.name, Tensor(shape, std::vector<double>(blob.values.begin(), blob.values.end())));
  }
  return store;
}

void round_to_float(ParameterStore& store) {
  for (auto& [name, e] : store.entries()) {
    for (double& v : e.value.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace abm::nn
