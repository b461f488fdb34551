// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian primitive readers and writers shared by the checkpoint and
// feature sidecar formats. Short reads raise LoadError.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "graphmix/errors.hpp"

namespace graphmix::bin {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw LoadError(std::string("unexpected end of file reading ") + what);
  return v;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& in, const char* what) {
  const auto n = read_pod<std::uint32_t>(in, what);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw LoadError(std::string("unexpected end of file reading ") + what);
  return s;
}

inline void write_doubles(std::ostream& out, const double* data, std::size_t n) {
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
}

inline void read_doubles(std::istream& in, double* data, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(double)));
  if (!in) throw LoadError(std::string("unexpected end of file reading ") + what);
}

}  // namespace graphmix::bin
