#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cranial/grid.hpp"

namespace cranial {

enum class NrrdScalar { Int8, UInt8, Int16, UInt16 };

std::string to_string(NrrdScalar t);

/// A decoded NRRD volume. Values are widened to int32 so every supported
/// scalar type fits; `scalar` remembers what the file stored.
struct NrrdImage {
  NrrdScalar scalar = NrrdScalar::UInt8;
  LabelGrid voxels;
};

class NrrdError : public std::runtime_error {
 public:
  enum class Kind {
    MalformedHeader,
    MissingField,
    UnsupportedDimension,
    UnsupportedType,
    UnsupportedEncoding,
    DataLengthMismatch,
    ValueOutOfRange,
    Io,
  };

  NrrdError(Kind kind, std::string field, const std::string& message)
      : std::runtime_error("nrrd: " + field + ": " + message), kind_(kind), field_(std::move(field)) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

 private:
  Kind kind_;
  std::string field_;
};

using Bytes = std::vector<std::uint8_t>;

/// Parses an attached-data NRRD (3D, raw or gzip, 8/16-bit integers).
NrrdImage read_nrrd(std::span<const std::uint8_t> bytes);

/// Serializes as NRRD0004 with a raw little-endian payload. Output is a pure
/// function of the grid.
Bytes write_nrrd(const Mask& grid);
Bytes write_nrrd(const HuVolume& grid);
Bytes write_nrrd(const NrrdImage& image);

/// Checked conversions from a decoded image.
Mask to_mask(const NrrdImage& image);
HuVolume to_hu(const NrrdImage& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

NrrdImage load_nrrd(const std::filesystem::path& path);
Mask load_mask(const std::filesystem::path& path);
HuVolume load_hu(const std::filesystem::path& path);
void save_nrrd(const std::filesystem::path& path, const Mask& grid);
void save_nrrd(const std::filesystem::path& path, const HuVolume& grid);

}  // namespace cranial
