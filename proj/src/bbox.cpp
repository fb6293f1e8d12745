#include "cranial/bbox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cranial {

std::string to_string(const BBox& b) {
  return "x[" + std::to_string(b.lo.x) + "," + std::to_string(b.hi.x) + ") y[" + std::to_string(b.lo.y) + "," +
         std::to_string(b.hi.y) + ") z[" + std::to_string(b.lo.z) + "," + std::to_string(b.hi.z) + ")";
}

BBox bbox_xy(const Mask& mask, int z_extent, ZAnchor anchor) {
  if (z_extent <= 0) throw ShapeError("bbox_xy: z_extent must be positive");
  const Dims d = mask.dims();
  int x0 = std::numeric_limits<int>::max(), y0 = x0, z0 = x0;
  int x1 = -1, y1 = -1, z1 = -1;
  double z_sum = 0.0;
  std::size_t n = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (mask(x, y, z) == 0) continue;
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        z0 = std::min(z0, z);
        z1 = std::max(z1, z);
        z_sum += z;
        ++n;
      }
    }
  }
  if (n == 0) throw EmptyMaskError("bbox_xy: mask is empty, no defect detected");

  const int length = std::min(z_extent, d.nz);
  const double center = anchor == ZAnchor::Centroid ? z_sum / static_cast<double>(n) : 0.5 * (z0 + z1);
  int start = static_cast<int>(std::lround(center - 0.5 * (length - 1)));
  start = std::clamp(start, 0, d.nz - length);
  return {{x0, y0, start}, {x1 + 1, y1 + 1, start + length}};
}

BBox expand_margin(const BBox& b, int margin, const Dims& host) {
  if (!b.valid_in(host)) throw ShapeError("expand_margin: box " + to_string(b) + " not inside " + to_string(host));
  if (margin < 0) throw ShapeError("expand_margin: negative margin");
  BBox out = b;
  out.lo.x = std::max(0, b.lo.x - margin);
  out.lo.y = std::max(0, b.lo.y - margin);
  out.hi.x = std::min(host.nx, b.hi.x + margin);
  out.hi.y = std::min(host.ny, b.hi.y + margin);
  return out;
}

BBox limit_extent(const BBox& b, const Dims& limit) {
  BBox out = b;
  auto shrink = [](int& lo, int& hi, int max_len) {
    const int len = hi - lo;
    if (len <= max_len) return;
    const int cut = len - max_len;
    lo += cut / 2;
    hi = lo + max_len;
  };
  shrink(out.lo.x, out.hi.x, limit.nx);
  shrink(out.lo.y, out.hi.y, limit.ny);
  shrink(out.lo.z, out.hi.z, limit.nz);
  return out;
}

template <typename T>
Grid<T> crop(const Grid<T>& grid, const BBox& b) {
  if (!b.valid_in(grid.dims())) {
    throw ShapeError("crop: box " + to_string(b) + " outside grid " + to_string(grid.dims()));
  }
  Grid<T> out(b.size(), grid.spacing());
  for (int z = b.lo.z; z < b.hi.z; ++z) {
    for (int y = b.lo.y; y < b.hi.y; ++y) {
      const T* src = &grid(b.lo.x, y, z);
      std::copy(src, src + (b.hi.x - b.lo.x), &out(0, y - b.lo.y, z - b.lo.z));
    }
  }
  return out;
}

template <typename T>
std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>& block, const Dims& canvas, const BBox& source_bbox,
                                              const Dims& source_dims) {
  const Dims bd = block.dims();
  if (!bd.fits_in(canvas)) {
    throw ShapeError("zero_pad_center: block " + to_string(bd) + " larger than canvas " + to_string(canvas));
  }
  if (source_bbox.size() != bd || !source_bbox.valid_in(source_dims)) {
    throw ShapeError("zero_pad_center: source box " + to_string(source_bbox) + " inconsistent with block " +
                     to_string(bd));
  }
  const Index3 offset{(canvas.nx - bd.nx) / 2, (canvas.ny - bd.ny) / 2, (canvas.nz - bd.nz) / 2};
  Grid<T> out(canvas, block.spacing());
  for (int z = 0; z < bd.nz; ++z) {
    for (int y = 0; y < bd.ny; ++y) {
      const T* src = &block(0, y, z);
      std::copy(src, src + bd.nx, &out(offset.x, y + offset.y, z + offset.z));
    }
  }
  return {std::move(out), Placement{offset, source_bbox, source_dims, canvas}};
}

template <typename T>
std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>& block, const Dims& canvas) {
  return zero_pad_center(block, canvas, BBox::whole(block.dims()), block.dims());
}

template <typename T>
Grid<T> restore(const Grid<T>& pred, const Placement& p) {
  if (pred.dims() != p.canvas_dims) {
    throw ShapeError("restore: prediction dims " + to_string(pred.dims()) + " differ from canvas " +
                     to_string(p.canvas_dims));
  }
  const Dims bd = p.source_bbox.size();
  const BBox in_canvas{p.offset, {p.offset.x + bd.nx, p.offset.y + bd.ny, p.offset.z + bd.nz}};
  if (!p.source_bbox.valid_in(p.source_dims) || !in_canvas.valid_in(p.canvas_dims)) {
    throw ShapeError("restore: inconsistent placement");
  }
  Grid<T> out(p.source_dims, pred.spacing());
  for (int z = 0; z < bd.nz; ++z) {
    for (int y = 0; y < bd.ny; ++y) {
      const T* src = &pred(p.offset.x, y + p.offset.y, z + p.offset.z);
      std::copy(src, src + bd.nx, &out(p.source_bbox.lo.x, y + p.source_bbox.lo.y, z + p.source_bbox.lo.z));
    }
  }
  return out;
}

#define CRANIAL_INSTANTIATE(T)                                                                            \
  template Grid<T> crop(const Grid<T>&, const BBox&);                                                     \
  template std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>&, const Dims&, const BBox&,        \
                                                         const Dims&);                                    \
  template std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>&, const Dims&);                    \
  template Grid<T> restore(const Grid<T>&, const Placement&);

CRANIAL_INSTANTIATE(std::uint8_t)
CRANIAL_INSTANTIATE(std::int16_t)
CRANIAL_INSTANTIATE(std::int32_t)
CRANIAL_INSTANTIATE(double)

#undef CRANIAL_INSTANTIATE

}  // namespace cranial
