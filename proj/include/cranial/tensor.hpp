#pragma once

#include <span>
#include <vector>

#include "cranial/grid.hpp"

namespace cranial {

/// Channel count plus spatial dims of a single-sample activation.
struct TensorShape {
  int channels = 1;
  Dims spatial{};

  [[nodiscard]] std::size_t voxels() const noexcept { return spatial.count(); }
  [[nodiscard]] std::size_t count() const noexcept { return static_cast<std::size_t>(channels) * voxels(); }
  friend bool operator==(const TensorShape&, const TensorShape&) = default;
};

std::string to_string(const TensorShape& s);

/// Dense activation, layout [channel][z][y][x] (x fastest).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorShape shape, double fill = 0.0);
  Tensor(TensorShape shape, std::vector<double> values);

  [[nodiscard]] const TensorShape& shape() const noexcept { return shape_; }
  [[nodiscard]] int channels() const noexcept { return shape_.channels; }
  [[nodiscard]] const Dims& spatial() const noexcept { return shape_.spatial; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }

  [[nodiscard]] double* data() noexcept { return values_.data(); }
  [[nodiscard]] const double* data() const noexcept { return values_.data(); }
  [[nodiscard]] std::span<double> channel(int c) noexcept {
    return {values_.data() + static_cast<std::size_t>(c) * shape_.voxels(), shape_.voxels()};
  }
  [[nodiscard]] std::span<const double> channel(int c) const noexcept {
    return {values_.data() + static_cast<std::size_t>(c) * shape_.voxels(), shape_.voxels()};
  }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& at(int c, int x, int y, int z) noexcept { return values_[offset(c, x, y, z)]; }
  double at(int c, int x, int y, int z) const noexcept { return values_[offset(c, x, y, z)]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] std::vector<double>& values() noexcept { return values_; }

  [[nodiscard]] bool all_finite() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  [[nodiscard]] std::size_t offset(int c, int x, int y, int z) const noexcept {
    const Dims& d = shape_.spatial;
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(d.nx) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(d.ny) * (static_cast<std::size_t>(z) + static_cast<std::size_t>(d.nz) * c));
  }

  TensorShape shape_{};
  std::vector<double> values_;
};

/// Single-channel tensor holding the grid values.
template <typename T>
Tensor to_tensor(const Grid<T>& grid);

/// Channel 0 of `t` as a probability map (values clamped to [0,1]).
ProbabilityMap to_probability_map(const Tensor& t, const Spacing& spacing);

}  // namespace cranial
