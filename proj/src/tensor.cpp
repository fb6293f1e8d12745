#include "cranial/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace cranial {

std::string to_string(const TensorShape& s) {
  return std::to_string(s.channels) + "x" + to_string(s.spatial);
}

Tensor::Tensor(TensorShape shape, double fill) : shape_(shape) {
  if (shape.channels <= 0 || !shape.spatial.positive()) throw ShapeError("tensor shape must be positive");
  values_.assign(shape.count(), fill);
}

Tensor::Tensor(TensorShape shape, std::vector<double> values) : shape_(shape), values_(std::move(values)) {
  if (shape.channels <= 0 || !shape.spatial.positive()) throw ShapeError("tensor shape must be positive");
  if (values_.size() != shape.count()) throw ShapeError("tensor value count does not match " + to_string(shape));
}

bool Tensor::all_finite() const noexcept {
  return std::ranges::all_of(values_, [](double v) { return std::isfinite(v); });
}

template <typename T>
Tensor to_tensor(const Grid<T>& grid) {
  std::vector<double> v(grid.values().begin(), grid.values().end());
  return Tensor({1, grid.dims()}, std::move(v));
}

ProbabilityMap to_probability_map(const Tensor& t, const Spacing& spacing) {
  const auto c0 = t.channel(0);
  std::vector<double> v(c0.begin(), c0.end());
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  return ProbabilityMap(t.spatial(), spacing, std::move(v));
}

template Tensor to_tensor(const Grid<std::uint8_t>&);
template Tensor to_tensor(const Grid<double>&);

}  // namespace cranial
