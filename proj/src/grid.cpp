#include "cranial/grid.hpp"

#include <algorithm>

namespace cranial {

std::string to_string(const Dims& d) {
  return "(" + std::to_string(d.nx) + "," + std::to_string(d.ny) + "," + std::to_string(d.nz) + ")";
}

bool is_binary(const Mask& m) {
  return std::ranges::all_of(m.values(), [](std::uint8_t v) { return v <= 1; });
}

bool is_probability(const ProbabilityMap& p) {
  return std::ranges::all_of(p.values(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

std::size_t count_foreground(const Mask& m) {
  return static_cast<std::size_t>(std::ranges::count_if(m.values(), [](std::uint8_t v) { return v != 0; }));
}

Mask threshold(const HuVolume& ct, std::int16_t lo) {
  Mask out(ct.dims(), ct.spacing());
  for (std::size_t i = 0; i < ct.size(); ++i) out[i] = ct[i] >= lo ? 1 : 0;
  return out;
}

Mask binarize(const ProbabilityMap& p, double t) {
  Mask out(p.dims(), p.spacing());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= t ? 1 : 0;
  return out;
}

namespace {

template <typename Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
  if (a.dims() != b.dims()) {
    throw ShapeError("mask dims differ: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
  Mask out(a.dims(), a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i] != 0, b[i] != 0) ? 1 : 0;
  return out;
}

}  // namespace

Mask mask_and(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}
Mask mask_or(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}
Mask mask_and_not(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

ProbabilityMap to_probability(const Mask& m) {
  ProbabilityMap out(m.dims(), m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] != 0 ? 1.0 : 0.0;
  return out;
}

}  // namespace cranial
