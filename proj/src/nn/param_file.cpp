// SPDX-License-Identifier: Apache-2.0

#include "mawgan/nn/param_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace mawgan::nn {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'W', 'G', 'P', 'A', 'R', 'M'};

// Tensors larger than this are treated as corruption rather than allocated.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 32;

template <class T> void put_le(std::ostream &out, T v) {
  unsigned char bytes[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    bytes[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char *>(bytes), sizeof(T));
}

class Reader {
public:
  Reader(std::istream &in, const std::string &source) : in_(in), source_(source) {}

  void bytes(char *dst, std::size_t n, const char *what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      fail(ErrorKind::parse, source_ + ": truncated parameter file while reading " + what);
  }

  template <class T> T le(const char *what) {
    unsigned char b[sizeof(T)];
    bytes(reinterpret_cast<char *>(b), sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(b[i]) << (8 * i);
    return v;
  }

  [[noreturn]] void bad(const std::string &msg) { fail(ErrorKind::parse, source_ + ": " + msg); }

private:
  std::istream &in_;
  const std::string &source_;
};

} // namespace

void write_param_file(std::ostream &out, const ParamFile &file) {
  out.write(kMagic, sizeof kMagic);
  put_le<std::uint32_t>(out, kParamFileVersion);
  const std::string header = file.header.dump();
  put_le<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  put_le<std::uint64_t>(out, file.tensors.size());
  for (const NamedTensor &t : file.tensors) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le<std::uint32_t>(out, 2);
    put_le<std::uint64_t>(out, t.value.rows());
    put_le<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.values())
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out)
    fail(ErrorKind::io, "failed to write parameter data");
}

ParamFile read_param_file(std::istream &in, const std::string &source) {
  Reader r(in, source);
  char magic[8];
  r.bytes(magic, sizeof magic, "magic");
  if (std::memcmp(magic, kMagic, sizeof magic) != 0)
    r.bad("not a parameter file (bad magic)");
  const auto version = r.le<std::uint32_t>("version");
  if (version != kParamFileVersion)
    r.bad("unsupported parameter file version " + std::to_string(version));
  const auto header_len = r.le<std::uint64_t>("header length");
  if (header_len > (std::uint64_t{1} << 30))
    r.bad("implausible header length");
  std::string header(header_len, '\0');
  r.bytes(header.data(), header.size(), "header");
  ParamFile file;
  try {
    file.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception &e) {
    r.bad(std::string("invalid header: ") + e.what());
  }
  const auto count = r.le<std::uint64_t>("tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = r.le<std::uint32_t>("name length");
    if (name_len > 4096)
      r.bad("implausible tensor name length");
    std::string name(name_len, '\0');
    r.bytes(name.data(), name.size(), "tensor name");
    const auto rank = r.le<std::uint32_t>("rank");
    if (rank != 2)
      r.bad("tensor '" + name + "' has rank " + std::to_string(rank) + ", expected 2");
    const auto rows = r.le<std::uint64_t>("rows");
    const auto cols = r.le<std::uint64_t>("cols");
    if (cols != 0 && rows > kMaxValues / cols)
      r.bad("tensor '" + name + "' is implausibly large");
    std::vector<double> values(rows * cols);
    for (double &v : values)
      v = std::bit_cast<double>(r.le<std::uint64_t>("tensor data"));
    file.tensors.push_back({std::move(name), Tensor(rows, cols, std::move(values))});
  }
  return file;
}

void save_param_file(const std::filesystem::path &path, const ParamFile &file) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
  write_param_file(out, file);
  out.close();
  if (!out)
    fail(ErrorKind::io, "failed writing '" + path.string() + "'");
}

ParamFile load_param_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorKind::io, "cannot open '" + path.string() + "'");
  return read_param_file(in, path.string());
}

nlohmann::json to_json(const MlpSpec &spec) {
  return {{"widths", spec.widths},
          {"hidden", to_string(spec.hidden)},
          {"slope", spec.slope},
          {"output", to_string(spec.output)}};
}

MlpSpec mlp_spec_from_json(const nlohmann::json &j) {
  MlpSpec spec;
  try {
    spec.widths = j.at("widths").get<std::vector<std::size_t>>();
    spec.hidden = parse_activation(j.at("hidden").get<std::string>());
    spec.slope = j.at("slope").get<double>();
    spec.output = parse_activation(j.at("output").get<std::string>());
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::parse, std::string("invalid network description: ") + e.what());
  }
  spec.validate();
  return spec;
}

void save_params(const std::filesystem::path &path, const MlpSpec &spec,
                 std::uint64_t seed, const ParamSet &params) {
  check_params(spec, params);
  ParamFile file;
  file.header = {{"kind", "mlp"}, {"spec", to_json(spec)}, {"seed", seed}};
  file.tensors.assign(params.begin(), params.end());
  save_param_file(path, file);
}

LoadedParams load_params(const std::filesystem::path &path) {
  ParamFile file = load_param_file(path);
  LoadedParams out;
  try {
    if (file.header.at("kind").get<std::string>() != "mlp")
      fail(ErrorKind::parse, path.string() + ": not a network parameter file");
    out.spec = mlp_spec_from_json(file.header.at("spec"));
    out.seed = file.header.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception &e) {
    fail(ErrorKind::parse, path.string() + ": invalid header: " + e.what());
  }
  for (NamedTensor &t : file.tensors)
    out.params.add(std::move(t.name), std::move(t.value));
  check_params(out.spec, out.params);
  return out;
}

} // namespace mawgan::nn
