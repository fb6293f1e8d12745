#include "cranial/nrrd.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string_view>

namespace cranial {

namespace {

using Kind = NrrdError::Kind;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, const std::string& field) {
  T value{};
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw NrrdError(Kind::MalformedHeader, field, "cannot parse '" + std::string(token) + "'");
  }
  return value;
}

std::size_t scalar_bytes(NrrdScalar t) {
  return (t == NrrdScalar::Int8 || t == NrrdScalar::UInt8) ? 1 : 2;
}

NrrdScalar parse_type(std::string_view v) {
  static const std::map<std::string_view, NrrdScalar> names = {
      {"signed char", NrrdScalar::Int8},        {"int8", NrrdScalar::Int8},
      {"int8_t", NrrdScalar::Int8},             {"uchar", NrrdScalar::UInt8},
      {"unsigned char", NrrdScalar::UInt8},     {"uint8", NrrdScalar::UInt8},
      {"uint8_t", NrrdScalar::UInt8},           {"short", NrrdScalar::Int16},
      {"short int", NrrdScalar::Int16},         {"signed short", NrrdScalar::Int16},
      {"signed short int", NrrdScalar::Int16},  {"int16", NrrdScalar::Int16},
      {"int16_t", NrrdScalar::Int16},           {"ushort", NrrdScalar::UInt16},
      {"unsigned short", NrrdScalar::UInt16},   {"unsigned short int", NrrdScalar::UInt16},
      {"uint16", NrrdScalar::UInt16},           {"uint16_t", NrrdScalar::UInt16},
  };
  auto it = names.find(v);
  if (it == names.end()) {
    throw NrrdError(Kind::UnsupportedType, "type", "unsupported scalar type '" + std::string(v) + "'");
  }
  return it->second;
}

std::array<double, 3> parse_space_directions(std::string_view v) {
  std::array<double, 3> norms{};
  int axis = 0;
  std::size_t pos = 0;
  while (axis < 3) {
    const auto open = v.find('(', pos);
    if (open == std::string_view::npos) break;
    const auto close = v.find(')', open);
    if (close == std::string_view::npos) {
      throw NrrdError(Kind::MalformedHeader, "space directions", "unbalanced parenthesis");
    }
    const auto inner = v.substr(open + 1, close - open - 1);
    double sq = 0.0;
    int comps = 0;
    std::size_t start = 0;
    while (start <= inner.size()) {
      auto comma = inner.find(',', start);
      if (comma == std::string_view::npos) comma = inner.size();
      const double c = parse_number<double>(trim(inner.substr(start, comma - start)), "space directions");
      sq += c * c;
      ++comps;
      start = comma + 1;
    }
    if (comps != 3) throw NrrdError(Kind::MalformedHeader, "space directions", "expected 3-vectors");
    norms[static_cast<std::size_t>(axis++)] = std::sqrt(sq);
    pos = close + 1;
  }
  if (axis != 3) throw NrrdError(Kind::MalformedHeader, "space directions", "expected three vectors");
  return norms;
}

Bytes gunzip(std::span<const std::uint8_t> in, std::size_t expected) {
  Bytes out(expected);
  z_stream zs{};
  // 15 + 32: accept both gzip and zlib wrappers.
  if (inflateInit2(&zs, 15 + 32) != Z_OK) {
    throw NrrdError(Kind::UnsupportedEncoding, "encoding", "zlib initialisation failed");
  }
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = inflate(&zs, Z_FINISH);
  const std::size_t produced = zs.total_out;
  const bool output_full = zs.avail_out == 0;
  inflateEnd(&zs);
  if (rc == Z_STREAM_END && produced == expected) return out;
  if (rc == Z_STREAM_END || rc == Z_BUF_ERROR || rc == Z_OK) {
    throw NrrdError(Kind::DataLengthMismatch, "sizes",
                    output_full ? "gzip payload is larger than sizes*type"
                                : "gzip payload holds " + std::to_string(produced) +
                                      " bytes, expected " + std::to_string(expected));
  }
  throw NrrdError(Kind::UnsupportedEncoding, "encoding", "corrupt gzip payload");
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Bytes encode(NrrdScalar scalar, const Dims& dims, const Spacing& spacing,
             std::span<const std::int32_t> values) {
  std::ostringstream header;
  header << "NRRD0004\n"
         << "# Complete NRRD file format specification at:\n"
         << "# http://teem.sourceforge.net/nrrd/format.html\n"
         << "type: " << to_string(scalar) << "\n"
         << "dimension: 3\n"
         << "sizes: " << dims.nx << " " << dims.ny << " " << dims.nz << "\n"
         << "endian: little\n"
         << "encoding: raw\n"
         << "spacings: " << format_double(spacing.x) << " " << format_double(spacing.y) << " "
         << format_double(spacing.z) << "\n\n";
  const std::string h = header.str();
  const std::size_t width = scalar_bytes(scalar);
  Bytes out(h.begin(), h.end());
  out.reserve(h.size() + values.size() * width);
  for (std::int32_t v : values) {
    const auto u = static_cast<std::uint32_t>(v);
    out.push_back(static_cast<std::uint8_t>(u & 0xffu));
    if (width == 2) out.push_back(static_cast<std::uint8_t>((u >> 8) & 0xffu));
  }
  return out;
}

std::pair<std::int32_t, std::int32_t> scalar_range(NrrdScalar t) {
  switch (t) {
    case NrrdScalar::Int8: return {-128, 127};
    case NrrdScalar::UInt8: return {0, 255};
    case NrrdScalar::Int16: return {-32768, 32767};
    case NrrdScalar::UInt16: return {0, 65535};
  }
  return {0, 0};
}

}  // namespace

std::string to_string(NrrdScalar t) {
  switch (t) {
    case NrrdScalar::Int8: return "int8";
    case NrrdScalar::UInt8: return "uint8";
    case NrrdScalar::Int16: return "int16";
    case NrrdScalar::UInt16: return "uint16";
  }
  return "unknown";
}

NrrdImage read_nrrd(std::span<const std::uint8_t> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());

  std::size_t pos = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= text.size()) return std::nullopt;
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = std::min(nl + 1, text.size() + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  const auto magic = next_line();
  if (!magic || magic->size() != 8 || magic->substr(0, 7) != "NRRD000") {
    throw NrrdError(Kind::MalformedHeader, "magic", "missing NRRD000X magic line");
  }

  std::map<std::string, std::string, std::less<>> fields;
  bool terminated = false;
  while (auto line = next_line()) {
    if (line->empty()) {
      terminated = true;
      break;
    }
    if (line->front() == '#') continue;
    const auto colon = line->find(": ");
    if (colon == std::string_view::npos) {
      if (line->find(":=") != std::string_view::npos) continue;  // key/value comment pair
      throw NrrdError(Kind::MalformedHeader, std::string(trim(*line)), "expected 'field: value'");
    }
    fields[std::string(trim(line->substr(0, colon)))] = std::string(trim(line->substr(colon + 2)));
  }
  if (!terminated) throw NrrdError(Kind::MalformedHeader, "header", "no blank line before payload");
  pos = std::min(pos, text.size());

  auto require = [&](std::string_view key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw NrrdError(Kind::MissingField, std::string(key), "required field missing");
    return it->second;
  };

  if (fields.contains("data file") || fields.contains("datafile")) {
    throw NrrdError(Kind::UnsupportedEncoding, "data file", "detached payloads are not supported");
  }
  for (const char* skip : {"line skip", "lineskip", "byte skip", "byteskip"}) {
    auto it = fields.find(skip);
    if (it != fields.end() && it->second != "0") {
      throw NrrdError(Kind::MalformedHeader, skip, "non-zero skips are not supported");
    }
  }

  const int dimension = parse_number<int>(require("dimension"), "dimension");
  if (dimension != 3) {
    throw NrrdError(Kind::UnsupportedDimension, "dimension",
                    "only 3D volumes are supported, got " + std::to_string(dimension));
  }
  const NrrdScalar scalar = parse_type(require("type"));

  const auto size_tokens = split_ws(require("sizes"));
  if (size_tokens.size() != 3) {
    throw NrrdError(Kind::UnsupportedDimension, "sizes",
                    "expected 3 sizes, got " + std::to_string(size_tokens.size()));
  }
  Dims dims{parse_number<int>(size_tokens[0], "sizes"), parse_number<int>(size_tokens[1], "sizes"),
            parse_number<int>(size_tokens[2], "sizes")};
  if (!dims.positive()) throw NrrdError(Kind::MalformedHeader, "sizes", "sizes must be positive");

  const std::string& encoding = require("encoding");
  const bool gzip = encoding == "gzip" || encoding == "gz";
  if (!gzip && encoding != "raw") {
    throw NrrdError(Kind::UnsupportedEncoding, "encoding", "unsupported encoding '" + encoding + "'");
  }

  bool big_endian = false;
  const std::size_t width = scalar_bytes(scalar);
  if (auto it = fields.find("endian"); it != fields.end()) {
    if (it->second == "big") {
      big_endian = true;
    } else if (it->second != "little") {
      throw NrrdError(Kind::MalformedHeader, "endian", "expected 'little' or 'big'");
    }
  } else if (width > 1) {
    throw NrrdError(Kind::MissingField, "endian", "required for multi-byte types");
  }

  Spacing spacing;
  if (auto it = fields.find("spacings"); it != fields.end()) {
    const auto tokens = split_ws(it->second);
    if (tokens.size() != 3) throw NrrdError(Kind::MalformedHeader, "spacings", "expected 3 values");
    spacing = {parse_number<double>(tokens[0], "spacings"), parse_number<double>(tokens[1], "spacings"),
               parse_number<double>(tokens[2], "spacings")};
  } else if (auto sd = fields.find("space directions"); sd != fields.end()) {
    const auto n = parse_space_directions(sd->second);
    spacing = {n[0], n[1], n[2]};
  } else {
    throw NrrdError(Kind::MissingField, "spacings", "need 'spacings' or 'space directions'");
  }
  if (!spacing.positive() || !std::isfinite(spacing.x) || !std::isfinite(spacing.y) ||
      !std::isfinite(spacing.z)) {
    throw NrrdError(Kind::MalformedHeader, "spacings", "spacing must be finite and positive");
  }

  const std::size_t expected = dims.count() * width;
  const auto payload = bytes.subspan(pos);
  Bytes inflated;
  std::span<const std::uint8_t> raw = payload;
  if (gzip) {
    inflated = gunzip(payload, expected);
    raw = inflated;
  } else if (payload.size() != expected) {
    throw NrrdError(Kind::DataLengthMismatch, "sizes",
                    "payload holds " + std::to_string(payload.size()) + " bytes, expected " +
                        std::to_string(expected));
  }

  std::vector<std::int32_t> values(dims.count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (width == 1) {
      values[i] = scalar == NrrdScalar::Int8 ? static_cast<std::int8_t>(raw[i]) : raw[i];
    } else {
      const std::uint8_t b0 = raw[2 * i];
      const std::uint8_t b1 = raw[2 * i + 1];
      const auto u = static_cast<std::uint16_t>(big_endian ? (b0 << 8) | b1 : (b1 << 8) | b0);
      values[i] = scalar == NrrdScalar::Int16 ? static_cast<std::int16_t>(u) : u;
    }
  }
  return {scalar, LabelGrid(dims, spacing, std::move(values))};
}

Bytes write_nrrd(const Mask& grid) {
  std::vector<std::int32_t> v(grid.values().begin(), grid.values().end());
  return encode(NrrdScalar::UInt8, grid.dims(), grid.spacing(), v);
}

Bytes write_nrrd(const HuVolume& grid) {
  std::vector<std::int32_t> v(grid.values().begin(), grid.values().end());
  return encode(NrrdScalar::Int16, grid.dims(), grid.spacing(), v);
}

Bytes write_nrrd(const NrrdImage& image) {
  const auto [lo, hi] = scalar_range(image.scalar);
  for (std::int32_t v : image.voxels.values()) {
    if (v < lo || v > hi) {
      throw NrrdError(Kind::ValueOutOfRange, "type", "value " + std::to_string(v) + " does not fit " +
                                                          to_string(image.scalar));
    }
  }
  return encode(image.scalar, image.voxels.dims(), image.voxels.spacing(), image.voxels.values());
}

Mask to_mask(const NrrdImage& image) {
  Mask m(image.voxels.dims(), image.voxels.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto v = image.voxels[i];
    if (v != 0 && v != 1) {
      throw NrrdError(Kind::ValueOutOfRange, "data", "mask voxel value " + std::to_string(v) + " is not 0/1");
    }
    m[i] = static_cast<std::uint8_t>(v);
  }
  return m;
}

HuVolume to_hu(const NrrdImage& image) {
  HuVolume h(image.voxels.dims(), image.voxels.spacing());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto v = image.voxels[i];
    if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max()) {
      throw NrrdError(Kind::ValueOutOfRange, "data", "intensity " + std::to_string(v) + " exceeds int16");
    }
    h[i] = static_cast<std::int16_t>(v);
  }
  return h;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NrrdError(Kind::Io, path.string(), "cannot open for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw NrrdError(Kind::Io, path.string(), "cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw NrrdError(Kind::Io, path.string(), "write failed");
}

NrrdImage load_nrrd(const std::filesystem::path& path) { return read_nrrd(read_file(path)); }
Mask load_mask(const std::filesystem::path& path) { return to_mask(load_nrrd(path)); }
HuVolume load_hu(const std::filesystem::path& path) { return to_hu(load_nrrd(path)); }
void save_nrrd(const std::filesystem::path& path, const Mask& grid) { write_file(path, write_nrrd(grid)); }
void save_nrrd(const std::filesystem::path& path, const HuVolume& grid) { write_file(path, write_nrrd(grid)); }

}  // namespace cranial
