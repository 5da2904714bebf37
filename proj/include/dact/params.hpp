// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "dact/tensor.hpp"

namespace dact {

/// A named trainable tensor with its gradient and Adam moment buffers.
struct Param {
  std::string name;
  int index = 0;
  Tensor value;
  Tensor grad;
  Tensor m;  // first moment
  Tensor v;  // second moment

  void zero_grad() { grad.fill(0.0); }
};

/// Owns every trainable parameter of a model. Addresses are stable for the
/// lifetime of the store, so computation graphs may hold raw Param pointers.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;

  /// Registers a zero-initialised parameter. Names must be unique.
  Param& add(const std::string& name, int rows, int cols);
  /// Registers a weight matrix initialised uniform in [-1/sqrt(rows), 1/sqrt(rows)];
  /// rows is the fan-in under the row-vector convention x * W.
  Param& add_weight(const std::string& name, int rows, int cols, std::mt19937_64& rng);

  Param& get(const std::string& name);
  const Param& get(const std::string& name) const;
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return *params_[i]; }
  const Param& operator[](std::size_t i) const { return *params_[i]; }

  std::size_t num_scalars() const;
  void zero_grad();

  /// Optimizer step counter shared by all parameters.
  std::int64_t step = 0;

  /// Snapshot of all values (for best-checkpoint retention).
  std::vector<Tensor> snapshot() const;
  void restore(const std::vector<Tensor>& values);

 private:
  std::vector<std::unique_ptr<Param>> params_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

// Checkpoint container, version 1, all integers little-endian:
//   magic   "DACTCKPT" (8 bytes)
//   u32     version (= 1)
//   u64     metadata length N, followed by N bytes of UTF-8 metadata (JSON)
//   u32     parameter count P
//   P times: u32 name length, name bytes, u32 rows, u32 cols,
//            rows*cols IEEE-754 float64 values in row-major order
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(std::ostream& out, const ParamStore& store, const std::string& metadata);
/// Reads values into an already-constructed store; every stored name must exist
/// with the same shape, and every store parameter must be present.
std::string read_checkpoint(std::istream& in, ParamStore& store);
/// Reads only the metadata block.
std::string read_checkpoint_metadata(std::istream& in);

void save_checkpoint(const std::string& path, const ParamStore& store, const std::string& metadata);
std::string load_checkpoint(const std::string& path, ParamStore& store);
std::string load_checkpoint_metadata(const std::string& path);

}  // namespace dact
