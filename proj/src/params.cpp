// SPDX-License-Identifier: Apache-2.0
#include "dact/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace dact {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

Param& ParamStore::add(const std::string& name, int rows, int cols) {
  if (by_name_.count(name)) throw Error("ParamStore: duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Param>();
  p->name = name;
  p->index = static_cast<int>(params_.size());
  p->value = Tensor(rows, cols);
  p->grad = Tensor(rows, cols);
  by_name_.emplace(name, params_.size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Param& ParamStore::add_weight(const std::string& name, int rows, int cols, std::mt19937_64& rng) {
  Param& p = add(name, rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : p.value.data) x = dist(rng);
  return p;
}

Param* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : params_[it->second].get();
}

const Param* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : params_[it->second].get();
}

Param& ParamStore::get(const std::string& name) {
  Param* p = find(name);
  if (!p) throw Error("ParamStore: no parameter named '" + name + "'");
  return *p;
}

const Param& ParamStore::get(const std::string& name) const {
  const Param* p = find(name);
  if (!p) throw Error("ParamStore: no parameter named '" + name + "'");
  return *p;
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

std::vector<Tensor> ParamStore::snapshot() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParamStore::restore(const std::vector<Tensor>& values) {
  if (values.size() != params_.size()) throw Error("ParamStore::restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i]->value)) throw Error("ParamStore::restore: shape mismatch for " + params_[i]->name);
    params_[i]->value = values[i];
  }
}

namespace {

constexpr char kMagic[8] = {'D', 'A', 'C', 'T', 'C', 'K', 'P', 'T'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint: truncated stream");
  return v;
}

std::string read_header(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw Error("checkpoint: bad magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw Error("checkpoint: unsupported version " + std::to_string(version));
  const auto meta_len = get<std::uint64_t>(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!in) throw Error("checkpoint: truncated metadata");
  return meta;
}

}  // namespace

void write_checkpoint(std::ostream& out, const ParamStore& store, const std::string& metadata) {
  out.write(kMagic, 8);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (std::size_t i = 0; i < store.size(); ++i) {
    const Param& p = store[i];
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.rows));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.value.cols));
    out.write(reinterpret_cast<const char*>(p.value.data.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!out) throw Error("checkpoint: write failed");
}

std::string read_checkpoint(std::istream& in, ParamStore& store) {
  std::string meta = read_header(in);
  const auto count = get<std::uint32_t>(in);
  if (count != store.size()) {
    throw Error("checkpoint: holds " + std::to_string(count) + " parameters, model expects " +
                std::to_string(store.size()));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = get<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = static_cast<int>(get<std::uint32_t>(in));
    const auto cols = static_cast<int>(get<std::uint32_t>(in));
    Param* p = store.find(name);
    if (!p) throw Error("checkpoint: unknown parameter '" + name + "'");
    if (p->value.rows != rows || p->value.cols != cols) {
      throw Error("checkpoint: shape mismatch for '" + name + "'");
    }
    in.read(reinterpret_cast<char*>(p->value.data.data()), static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    if (!in) throw Error("checkpoint: truncated values for '" + name + "'");
  }
  return meta;
}

std::string read_checkpoint_metadata(std::istream& in) { return read_header(in); }

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_checkpoint(out, store, metadata);
}

std::string load_checkpoint(const std::string& path, ParamStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return read_checkpoint(in, store);
}

std::string load_checkpoint_metadata(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  return read_checkpoint_metadata(in);
}

}  // namespace dact
