#include "cranial/resample.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace cranial {

namespace {

void check_target(const Dims& from, const Dims& to, bool shrinking) {
  if (!to.positive()) throw ShapeError("resample target dims must be positive, got " + to_string(to));
  const bool ok = shrinking ? to.fits_in(from) : from.fits_in(to);
  if (!ok) {
    throw ShapeError(std::string(shrinking ? "downsample" : "upsample") + " target " + to_string(to) +
                     " incompatible with source " + to_string(from));
  }
}

Spacing rescale(const Spacing& s, const Dims& from, const Dims& to) {
  return {s.x * from.nx / to.nx, s.y * from.ny / to.ny, s.z * from.nz / to.nz};
}

int mirror(int k, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  k %= period;
  if (k < 0) k += period;
  return k < n ? k : period - k;
}

// Resamples one axis of a dense x-fastest buffer with quadratic spline
// interpolation.
std::vector<double> spline_axis(const std::vector<double>& in, std::array<std::size_t, 3> dims,
                                std::size_t axis, std::size_t target) {
  auto out_dims = dims;
  out_dims[axis] = target;
  const std::size_t n = dims[axis];
  const std::array<std::size_t, 3> in_stride = {1, dims[0], dims[0] * dims[1]};
  const std::array<std::size_t, 3> out_stride = {1, out_dims[0], out_dims[0] * out_dims[1]};

  struct Taps {
    std::array<std::size_t, 3> index;
    std::array<double, 3> weight;
  };
  std::vector<Taps> taps(target);
  for (std::size_t i = 0; i < target; ++i) {
    const double x = (static_cast<double>(i) + 0.5) * static_cast<double>(n) / static_cast<double>(target) - 0.5;
    const int c = static_cast<int>(std::floor(x + 0.5));
    for (std::size_t j = 0; j < 3; ++j) {
      const int k = c - 1 + static_cast<int>(j);
      taps[i].index[j] = static_cast<std::size_t>(mirror(k, static_cast<int>(n)));
      taps[i].weight[j] = bspline2(x - k);
    }
  }

  // The two axes left untouched.
  const std::size_t a1 = axis == 0 ? 1 : 0;
  const std::size_t a2 = axis == 2 ? 1 : 2;
  std::vector<double> out(out_dims[0] * out_dims[1] * out_dims[2]);
  std::vector<double> line(n);
  for (std::size_t u = 0; u < dims[a2]; ++u) {
    for (std::size_t v = 0; v < dims[a1]; ++v) {
      const std::size_t in_base = u * in_stride[a2] + v * in_stride[a1];
      const std::size_t out_base = u * out_stride[a2] + v * out_stride[a1];
      for (std::size_t k = 0; k < n; ++k) line[k] = in[in_base + k * in_stride[axis]];
      const auto coeff = spline2_coefficients(line);
      for (std::size_t i = 0; i < target; ++i) {
        const auto& t = taps[i];
        out[out_base + i * out_stride[axis]] = t.weight[0] * coeff[t.index[0]] +
                                               t.weight[1] * coeff[t.index[1]] +
                                               t.weight[2] * coeff[t.index[2]];
      }
    }
  }
  return out;
}

}  // namespace

int nearest_source_index(int i, int from, int to) {
  // Exact integer form of floor((i + 0.5) * from / to).
  const long long num = (2LL * i + 1) * from;
  return static_cast<int>(num / (2LL * to));
}

template <typename T>
Grid<T> downsample(const Grid<T>& grid, Dims target) {
  const Dims& src = grid.dims();
  check_target(src, target, true);
  Grid<T> out(target, rescale(grid.spacing(), src, target));
  std::vector<int> xs(static_cast<std::size_t>(target.nx));
  std::vector<int> ys(static_cast<std::size_t>(target.ny));
  for (int i = 0; i < target.nx; ++i) xs[static_cast<std::size_t>(i)] = nearest_source_index(i, src.nx, target.nx);
  for (int i = 0; i < target.ny; ++i) ys[static_cast<std::size_t>(i)] = nearest_source_index(i, src.ny, target.ny);
  for (int z = 0; z < target.nz; ++z) {
    const int sz = nearest_source_index(z, src.nz, target.nz);
    for (int y = 0; y < target.ny; ++y) {
      for (int x = 0; x < target.nx; ++x) {
        out(x, y, z) = grid(xs[static_cast<std::size_t>(x)], ys[static_cast<std::size_t>(y)], sz);
      }
    }
  }
  return out;
}

double bspline2(double t) {
  const double a = std::abs(t);
  if (a < 0.5) return 0.75 - a * a;
  if (a < 1.5) return 0.5 * (a - 1.5) * (a - 1.5);
  return 0.0;
}

std::vector<double> spline2_coefficients(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  std::vector<double> c(samples);
  if (n <= 1) return c;

  const double z = std::sqrt(8.0) - 3.0;
  const double gain = (1.0 - z) * (1.0 - 1.0 / z);
  for (double& v : c) v *= gain;

  // Causal initialisation for whole-sample mirror symmetry.
  double zn = z;
  const double iz = 1.0 / z;
  double z2n = std::pow(z, static_cast<double>(n - 1));
  double sum = c[0] + z2n * c[n - 1];
  z2n *= z2n * iz;
  for (std::size_t k = 1; k + 1 < n; ++k) {
    sum += (zn + z2n) * c[k];
    zn *= z;
    z2n *= iz;
  }
  c[0] = sum / (1.0 - zn * zn);
  for (std::size_t k = 1; k < n; ++k) c[k] += z * c[k - 1];

  c[n - 1] = (z / (z * z - 1.0)) * (z * c[n - 2] + c[n - 1]);
  for (std::size_t k = n - 1; k-- > 0;) c[k] = z * (c[k + 1] - c[k]);
  return c;
}

template <typename T>
ProbabilityMap upsample_spline2(const Grid<T>& grid, Dims target) {
  const Dims& src = grid.dims();
  check_target(src, target, false);
  std::vector<double> buf(grid.values().begin(), grid.values().end());
  std::array<std::size_t, 3> dims = {static_cast<std::size_t>(src.nx), static_cast<std::size_t>(src.ny),
                                      static_cast<std::size_t>(src.nz)};
  const std::array<std::size_t, 3> want = {static_cast<std::size_t>(target.nx),
                                           static_cast<std::size_t>(target.ny),
                                           static_cast<std::size_t>(target.nz)};
  for (std::size_t axis = 0; axis < 3; ++axis) {
    buf = spline_axis(buf, dims, axis, want[axis]);
    dims[axis] = want[axis];
  }
  for (double& v : buf) v = std::clamp(v, 0.0, 1.0);
  return ProbabilityMap(target, rescale(grid.spacing(), src, target), std::move(buf));
}

template Grid<std::uint8_t> downsample(const Grid<std::uint8_t>&, Dims);
template Grid<std::int16_t> downsample(const Grid<std::int16_t>&, Dims);
template Grid<std::int32_t> downsample(const Grid<std::int32_t>&, Dims);
template Grid<double> downsample(const Grid<double>&, Dims);
template ProbabilityMap upsample_spline2(const Grid<std::uint8_t>&, Dims);
template ProbabilityMap upsample_spline2(const Grid<double>&, Dims);

}  // namespace cranial
