// SPDX-License-Identifier: Apache-2.0
//
// Binary container for named tensors:
//
//   "MAWGPARM"  u32 version  u64 header_bytes  <JSON header>
//   u64 tensor_count
//   per tensor: u32 name_bytes <name> u32 rank(=2) u64 rows u64 cols
//               rows*cols f64
//
// All integers and floats are little-endian; doubles are stored bit for
// bit so a write/read cycle is exact.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "json.hpp"
#include "mawgan/nn/mlp.hpp"
#include "mawgan/nn/param_set.hpp"

namespace mawgan::nn {

inline constexpr std::uint32_t kParamFileVersion = 1;

struct ParamFile {
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
};

void write_param_file(std::ostream &out, const ParamFile &file);
/// Throws ErrorKind::parse on a malformed or truncated stream.
ParamFile read_param_file(std::istream &in, const std::string &source = "<stream>");

void save_param_file(const std::filesystem::path &path, const ParamFile &file);
ParamFile load_param_file(const std::filesystem::path &path);

nlohmann::json to_json(const MlpSpec &spec);
MlpSpec mlp_spec_from_json(const nlohmann::json &j);

/// Network parameters with their MlpSpec and seed in the header.
void save_params(const std::filesystem::path &path, const MlpSpec &spec,
                 std::uint64_t seed, const ParamSet &params);

struct LoadedParams {
  MlpSpec spec;
  std::uint64_t seed = 0;
  ParamSet params;
};
LoadedParams load_params(const std::filesystem::path &path);

} // namespace mawgan::nn
