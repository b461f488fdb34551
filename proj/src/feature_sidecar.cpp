// SPDX-FileCopyrightText: Copyright (c) 2026 The graphmix Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>

#include "graphmix/binary_io.hpp"
#include "graphmix/encodings.hpp"

namespace graphmix {
namespace {

constexpr char kMagic[4] = {'G', 'P', 'S', 'F'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void write_feature_sidecar(const std::string& path, const EncodingOptions& options,
                           const std::vector<GraphFeatures>& features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write feature file " + path);
  out.write(kMagic, 4);
  bin::write_pod<std::uint32_t>(out, kVersion);
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(options.k_lap));
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(options.k_rw));
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(options.max_spd));
  bin::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(options.max_degree));
  bin::write_pod<std::uint64_t>(out, features.size());
  for (const auto& f : features) {
    const auto n = static_cast<std::uint32_t>(f.degree.size());
    bin::write_pod<std::uint32_t>(out, n);
    bin::write_doubles(out, f.spectral.eig_vectors.data(),
                       static_cast<std::size_t>(f.spectral.eig_vectors.size()));
    bin::write_doubles(out, f.spectral.eig_values.data(),
                       static_cast<std::size_t>(f.spectral.eig_values.size()));
    bin::write_doubles(out, f.random_walk.data(), static_cast<std::size_t>(f.random_walk.size()));
    for (const auto d : f.degree) bin::write_pod<std::int32_t>(out, d);
    for (Index k = 0; k < f.spd.size(); ++k) bin::write_pod<std::int32_t>(out, f.spd.data()[k]);
  }
  if (!out) throw ConfigError("failed writing feature file " + path);
}

std::vector<GraphFeatures> read_feature_sidecar(const std::string& path,
                                                EncodingOptions* options_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open feature file " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw LoadError(path + ": not a feature sidecar (bad magic)");
  }
  if (bin::read_pod<std::uint32_t>(in, "version") != kVersion) {
    throw LoadError(path + ": unsupported sidecar version");
  }
  EncodingOptions opt;
  opt.k_lap = static_cast<std::int32_t>(bin::read_pod<std::uint32_t>(in, "k_lap"));
  opt.k_rw = static_cast<std::int32_t>(bin::read_pod<std::uint32_t>(in, "k_rw"));
  opt.max_spd = static_cast<std::int32_t>(bin::read_pod<std::uint32_t>(in, "max_spd"));
  opt.max_degree = static_cast<std::int32_t>(bin::read_pod<std::uint32_t>(in, "max_degree"));
  const auto count = bin::read_pod<std::uint64_t>(in, "graph count");
  std::vector<GraphFeatures> out;
  out.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
  for (std::uint64_t g = 0; g < count; ++g) {
    const auto n = static_cast<Index>(bin::read_pod<std::uint32_t>(in, "node count"));
    GraphFeatures f;
    f.spectral.eig_vectors.resize(n, opt.k_lap);
    f.spectral.eig_values.resize(1, opt.k_lap);
    f.random_walk.resize(n, opt.k_rw);
    bin::read_doubles(in, f.spectral.eig_vectors.data(),
                      static_cast<std::size_t>(f.spectral.eig_vectors.size()), "eigenvectors");
    bin::read_doubles(in, f.spectral.eig_values.data(), static_cast<std::size_t>(opt.k_lap),
                      "eigenvalues");
    bin::read_doubles(in, f.random_walk.data(), static_cast<std::size_t>(f.random_walk.size()),
                      "random walk");
    f.degree.resize(static_cast<std::size_t>(n));
    for (auto& d : f.degree) d = bin::read_pod<std::int32_t>(in, "degree");
    f.spd.resize(n, n);
    for (Index k = 0; k < f.spd.size(); ++k) f.spd.data()[k] = bin::read_pod<std::int32_t>(in, "spd");
    out.push_back(std::move(f));
  }
  if (options_out) *options_out = opt;
  return out;
}

}  // namespace graphmix
