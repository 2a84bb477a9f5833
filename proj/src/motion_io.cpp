// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "mawgan/motion.hpp"

namespace mawgan {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos)
    return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(const std::string &source, std::size_t line,
                             const std::string &what) {
  fail(ErrorKind::parse, source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view token, const std::string &source,
                    std::size_t line, std::size_t field) {
  double v = 0.0;
  const char *first = token.data();
  const char *last = token.data() + token.size();
  if (!token.empty() && *first == '+')
    ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    parse_fail(source, line,
               "field " + std::to_string(field) + ": invalid number '" +
                   std::string(token) + "'");
  if (!std::isfinite(v))
    parse_fail(source, line,
               "field " + std::to_string(field) + ": non-finite value '" +
                   std::string(token) + "'");
  return v;
}

std::size_t parse_size(std::string_view token, const std::string &source,
                       std::size_t line, std::string_view key) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size())
    parse_fail(source, line,
               "header field '" + std::string(key) + "': invalid integer '" +
                   std::string(token) + "'");
  return v;
}

struct Header {
  std::size_t joints = 0;
  double fps = 0.0;
  std::size_t frames = 0;
  std::string label;
};

Header parse_header(std::string_view text, const std::string &source,
                    std::size_t line) {
  Header h;
  bool have_joints = false, have_fps = false, have_frames = false;
  text.remove_prefix(std::string_view("sequence").size());
  while (true) {
    text = trim(text);
    if (text.empty())
      break;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos)
      parse_fail(source, line,
                 "header token without '=': '" + std::string(text) + "'");
    const std::string_view key = text.substr(0, eq);
    text.remove_prefix(eq + 1);
    if (key == "label") {
      h.label = std::string(trim(text));
      break;
    }
    const auto sp = text.find_first_of(" \t");
    const std::string_view value = text.substr(0, sp);
    text.remove_prefix(sp == std::string_view::npos ? text.size() : sp);
    if (key == "joints") {
      h.joints = parse_size(value, source, line, key);
      have_joints = true;
    } else if (key == "frames") {
      h.frames = parse_size(value, source, line, key);
      have_frames = true;
    } else if (key == "fps") {
      h.fps = parse_double(value, source, line, 0);
      have_fps = true;
    } else {
      parse_fail(source, line, "unknown header field '" + std::string(key) + "'");
    }
  }
  if (!have_joints || !have_fps || !have_frames)
    parse_fail(source, line, "header needs joints=, fps= and frames=");
  if (h.frames == 0 || h.joints == 0 || !(h.fps > 0.0))
    parse_fail(source, line, "header values must be positive");
  return h;
}

void format_double(std::ostream &out, double v) {
  char buf[40];
  auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific, 16);
  out.write(buf, ptr - buf);
}

} // namespace

std::vector<MotionSequence> read_sequences(std::istream &in,
                                           const SkeletonTopology &topology,
                                           const std::string &source) {
  std::vector<MotionSequence> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#')
      continue;
    if (!text.starts_with("sequence"))
      parse_fail(source, line, "expected a 'sequence' header");
    const Header h = parse_header(text, source, line);
    if (h.joints != topology.joints)
      fail(ErrorKind::shape, source + ":" + std::to_string(line) +
                                 ": sequence has " + std::to_string(h.joints) +
                                 " joints, topology expects " +
                                 std::to_string(topology.joints));
    const std::size_t d = 3 * h.joints;
    Tensor coords(h.frames, d);
    for (std::size_t t = 0; t < h.frames; ++t) {
      if (!std::getline(in, raw))
        parse_fail(source, line + 1,
                   "unexpected end of file: expected " +
                       std::to_string(h.frames) + " frames, got " +
                       std::to_string(t));
      ++line;
      std::string_view row = trim(raw);
      std::size_t field = 0;
      while (!row.empty()) {
        const auto sp = row.find_first_of(" \t");
        const std::string_view token = row.substr(0, sp);
        if (field >= d)
          parse_fail(source, line, "too many values (expected " +
                                       std::to_string(d) + ")");
        coords(t, field) = parse_double(token, source, line, field + 1);
        ++field;
        row = sp == std::string_view::npos ? std::string_view{}
                                           : trim(row.substr(sp));
      }
      if (field != d)
        parse_fail(source, line, "expected " + std::to_string(d) +
                                     " values, got " + std::to_string(field));
    }
    out.emplace_back(h.joints, h.fps, std::move(coords), h.label);
  }
  return out;
}

void write_sequences(std::ostream &out, std::span<const MotionSequence> seqs) {
  out << "# mawgan motion v1\n";
  for (const MotionSequence &seq : seqs) {
    out << "sequence joints=" << seq.joints() << " fps=";
    format_double(out, seq.fps());
    out << " frames=" << seq.frames();
    if (!seq.label().empty()) {
      if (seq.label().find('\n') != std::string::npos)
        fail(ErrorKind::argument, "sequence label may not contain newlines");
      out << " label=" << seq.label();
    }
    out << '\n';
    for (std::size_t t = 0; t < seq.frames(); ++t) {
      auto f = seq.frame(t);
      for (std::size_t c = 0; c < f.size(); ++c) {
        if (c)
          out << ' ';
        format_double(out, f[c]);
      }
      out << '\n';
    }
  }
}

std::vector<MotionSequence> load_sequences(const std::filesystem::path &path,
                                           const SkeletonTopology &topology) {
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::io, "cannot open sequence file " + path.string());
  return read_sequences(in, topology, path.string());
}

void save_sequences(const std::filesystem::path &path,
                    std::span<const MotionSequence> seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::io, "cannot write sequence file " + path.string());
  write_sequences(out, seqs);
  if (!out)
    fail(ErrorKind::io, "write failed for " + path.string());
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path &dir) {
  const auto path = dir / kManifestName;
  std::ifstream in(path);
  if (!in)
    fail(ErrorKind::io, "cannot open dataset manifest " + path.string());
  std::vector<ManifestEntry> entries;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = trim(raw);
    if (text.empty() || text.front() == '#')
      continue;
    const auto tab = text.find('\t');
    ManifestEntry e;
    if (tab == std::string_view::npos) {
      e.file = std::string(text);
    } else {
      e.file = std::string(trim(text.substr(0, tab)));
      e.label = std::string(trim(text.substr(tab + 1)));
    }
    if (e.file.empty())
      parse_fail(path.string(), line, "empty file name");
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path &dir,
                    std::span<const ManifestEntry> entries) {
  const auto path = dir / kManifestName;
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorKind::io, "cannot write dataset manifest " + path.string());
  for (const ManifestEntry &e : entries)
    out << e.file << '\t' << e.label << '\n';
}

std::vector<MotionSequence> load_dataset(const std::filesystem::path &dir,
                                         const SkeletonTopology &topology) {
  std::vector<MotionSequence> out;
  for (const ManifestEntry &e : read_manifest(dir)) {
    auto seqs = load_sequences(dir / e.file, topology);
    for (auto &s : seqs) {
      if (!e.label.empty())
        s.set_label(e.label);
      out.push_back(std::move(s));
    }
  }
  return out;
}

} // namespace mawgan
