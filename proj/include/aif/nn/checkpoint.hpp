#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>

#include "aif/nn/tensor.hpp"

namespace aif::nn {

/// Parameter checkpoint: string metadata plus named tensors.
///
/// Binary layout, all integers and doubles little-endian:
///   "AIFCKPT\0"                      8-byte magic
///   u32 version                      currently 1
///   u32 n_meta, then n_meta × { u32 len, key bytes, u32 len, value bytes }
///   u32 n_tensors, then n_tensors × { u32 len, name bytes, u32 rank,
///                                     u64 dims[rank], f64 values[prod(dims)] }
/// Entries are written in name order.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::map<std::string, Tensor> tensors;

  void add(const Parameter& p) { tensors[p.name] = p.value; }
  void add(std::span<const Parameter* const> params) {
    for (const Parameter* p : params) add(*p);
  }
  /// Copy stored values into `params`; missing names or shape mismatches throw InputError.
  void restore(std::span<Parameter* const> params) const;

  std::string serialize() const;
  static Checkpoint deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace aif::nn
