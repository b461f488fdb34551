// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include "graphmix/param_store.hpp"

#include <istream>
#include <ostream>

#include "graphmix/binary_io.hpp"
#include "graphmix/errors.hpp"

namespace graphmix {

DiffArray& ParamStore::add(const std::string& name, Matrix value) {
  if (contains(name)) throw ConfigError("duplicate parameter name " + name);
  index_.emplace(name, arrays_.size());
  names_.push_back(name);
  arrays_.push_back(DiffArray::parameter(std::move(value)));
  return arrays_.back();
}

const DiffArray& ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return arrays_[it->second];
}

DiffArray& ParamStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return arrays_[it->second];
}

std::size_t ParamStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& a : arrays_) n += static_cast<std::size_t>(a.value().size());
  return n;
}

void ParamStore::zero_grad() {
  for (auto& a : arrays_) a.zero_grad();
}

void ParamStore::write(std::ostream& out) const {
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(arrays_.size()));
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    const Matrix& v = arrays_[i].value();
    bin::write_string(out, names_[i]);
    bin::write_pod<std::uint32_t>(out, 2);
    bin::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.rows()));
    bin::write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(v.cols()));
    bin::write_doubles(out, v.data(), static_cast<std::size_t>(v.size()));
  }
}

ParamStore ParamStore::read(std::istream& in) {
  ParamStore store;
  const auto count = bin::read_pod<std::uint32_t>(in, "tensor count");
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = bin::read_string(in, "tensor name");
    const auto rank = bin::read_pod<std::uint32_t>(in, "tensor rank");
    if (rank != 2) throw LoadError("tensor " + name + ": unsupported rank " + std::to_string(rank));
    const auto rows = bin::read_pod<std::uint64_t>(in, "tensor rows");
    const auto cols = bin::read_pod<std::uint64_t>(in, "tensor cols");
    if (rows > (1u << 28) || cols > (1u << 28)) throw LoadError("tensor " + name + ": implausible shape");
    Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
    bin::read_doubles(in, m.data(), static_cast<std::size_t>(m.size()), "tensor data");
    if (store.contains(name)) throw LoadError("duplicate tensor " + name);
    store.add(name, std::move(m));
  }
  return store;
}

void ParamStore::assign_values(const ParamStore& other) {
  for (const auto& name : names_) {
    if (!other.contains(name)) throw LoadError("missing tensor " + name);
    const Matrix& src = other.get(name).value();
    Matrix& dst = get(name).value_mut();
    if (src.rows() != dst.rows() || src.cols() != dst.cols()) {
      throw LoadError("tensor " + name + ": shape " + to_string({src.rows(), src.cols()}) +
                      " does not match expected " + to_string({dst.rows(), dst.cols()}));
    }
    dst = src;
  }
  if (other.size() != size()) throw LoadError("checkpoint holds unexpected extra tensors");
}

}  // namespace graphmix
