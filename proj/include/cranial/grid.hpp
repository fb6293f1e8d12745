#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cranial {

/// Voxel counts along x, y, z.
struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  [[nodiscard]] std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  [[nodiscard]] bool positive() const noexcept { return nx > 0 && ny > 0 && nz > 0; }
  [[nodiscard]] int operator[](int axis) const noexcept {
    return axis == 0 ? nx : (axis == 1 ? ny : nz);
  }
  [[nodiscard]] bool fits_in(const Dims& other) const noexcept {
    return nx <= other.nx && ny <= other.ny && nz <= other.nz;
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

std::string to_string(const Dims& d);

/// Integer voxel coordinate.
struct Index3 {
  int x = 0;
  int y = 0;
  int z = 0;
  [[nodiscard]] int operator[](int axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  friend bool operator==(const Index3&, const Index3&) = default;
};

/// Physical voxel size in millimetres.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  [[nodiscard]] double operator[](int axis) const noexcept {
    return axis == 0 ? x : (axis == 1 ? y : z);
  }
  [[nodiscard]] bool positive() const noexcept { return x > 0.0 && y > 0.0 && z > 0.0; }
  friend bool operator==(const Spacing&, const Spacing&) = default;
};

/// Thrown when volumes or boxes do not line up (dims, channels, extents).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Dense 3D volume with x-fastest storage: index = x + nx * (y + ny * z).
///
/// The element type carries the voxel kind: `HuVolume` holds signed 16-bit
/// intensities, `Mask` holds binary {0,1} labels and `ProbabilityMap` holds
/// values in [0,1].
template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;

  explicit Grid(Dims dims, Spacing spacing = {}, T fill = T{})
      : dims_(dims), spacing_(spacing) {
    check_header();
    data_.assign(dims_.count(), fill);
  }

  Grid(Dims dims, Spacing spacing, std::vector<T> data)
      : dims_(dims), spacing_(spacing), data_(std::move(data)) {
    check_header();
    if (data_.size() != dims_.count()) {
      throw ShapeError("grid data length " + std::to_string(data_.size()) +
                       " does not match dims " + to_string(dims_));
    }
  }

  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
  void set_spacing(Spacing s) {
    if (!s.positive()) throw ShapeError("spacing must be strictly positive");
    spacing_ = s;
  }

  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims_.ny) * static_cast<std::size_t>(z));
  }
  [[nodiscard]] Index3 coord(std::size_t i) const noexcept {
    const auto nx = static_cast<std::size_t>(dims_.nx);
    const auto ny = static_cast<std::size_t>(dims_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }
  [[nodiscard]] bool contains(int x, int y, int z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
  }

  T& operator()(int x, int y, int z) noexcept { return data_[index(x, y, z)]; }
  const T& operator()(int x, int y, int z) const noexcept { return data_[index(x, y, z)]; }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  [[nodiscard]] std::span<T> values() noexcept { return data_; }
  [[nodiscard]] std::span<const T> values() const noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& storage() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  void check_header() const {
    if (!dims_.positive()) throw ShapeError("grid dims must be positive, got " + to_string(dims_));
    if (!spacing_.positive()) throw ShapeError("grid spacing must be strictly positive");
  }

  Dims dims_{};
  Spacing spacing_{};
  std::vector<T> data_;
};

using HuVolume = Grid<std::int16_t>;
using Mask = Grid<std::uint8_t>;
using ProbabilityMap = Grid<double>;
using LabelGrid = Grid<std::int32_t>;

/// True when every voxel is 0 or 1.
bool is_binary(const Mask& m);
/// True when every voxel lies in [0,1].
bool is_probability(const ProbabilityMap& p);

std::size_t count_foreground(const Mask& m);

/// Mask with 1 wherever the intensity is >= `lo` (Hounsfield units).
Mask threshold(const HuVolume& ct, std::int16_t lo = 150);

/// Mask with 1 wherever the probability is >= `t`.
Mask binarize(const ProbabilityMap& p, double t = 0.5);

/// Voxelwise set algebra on equally sized masks.
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_and_not(const Mask& a, const Mask& b);

ProbabilityMap to_probability(const Mask& m);

}  // namespace cranial
