// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "graphmix/diff.hpp"

namespace graphmix {

/// Named learnable tensors in insertion order. Names follow
/// `layer{l}/{module}/{tensor}` for per-layer weights.
class ParamStore {
 public:
  DiffArray& add(const std::string& name, Matrix value);
  const DiffArray& get(const std::string& name) const;
  DiffArray& get(const std::string& name);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  /// Total number of learnable scalars.
  std::size_t num_scalars() const;
  void zero_grad();

  /// Flat binary: u32 count, then per tensor u32 name length, name bytes,
  /// u32 rank (always 2), u64 rows, u64 cols, rows*cols little-endian f64.
  void write(std::ostream& out) const;
  static ParamStore read(std::istream& in);

  /// Copies values from `other`, which must hold the same names and shapes.
  void assign_values(const ParamStore& other);

 private:
  std::vector<std::string> names_;
  std::vector<DiffArray> arrays_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace graphmix
