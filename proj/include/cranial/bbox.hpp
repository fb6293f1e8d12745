#pragma once

#include <stdexcept>
#include <utility>

#include "cranial/grid.hpp"

namespace cranial {

/// Half-open integer box [lo, hi) in voxel coordinates.
struct BBox {
  Index3 lo;
  Index3 hi;

  [[nodiscard]] Dims size() const noexcept { return {hi.x - lo.x, hi.y - lo.y, hi.z - lo.z}; }
  [[nodiscard]] std::size_t volume() const noexcept { return size().positive() ? size().count() : 0; }
  [[nodiscard]] bool contains(int x, int y, int z) const noexcept {
    return x >= lo.x && x < hi.x && y >= lo.y && y < hi.y && z >= lo.z && z < hi.z;
  }
  /// Non-empty and inside a host of dims `host`.
  [[nodiscard]] bool valid_in(const Dims& host) const noexcept {
    return lo.x >= 0 && lo.y >= 0 && lo.z >= 0 && lo.x < hi.x && lo.y < hi.y && lo.z < hi.z &&
           hi.x <= host.nx && hi.y <= host.ny && hi.z <= host.nz;
  }
  static BBox whole(const Dims& d) { return {{0, 0, 0}, {d.nx, d.ny, d.nz}}; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

std::string to_string(const BBox& b);

/// Where a cropped block sits inside a zero-padded canvas, and where it came from.
struct Placement {
  Index3 offset;        // block origin inside the canvas
  BBox source_bbox;     // block extent inside the source grid
  Dims source_dims;     // full source grid dims
  Dims canvas_dims;

  friend bool operator==(const Placement&, const Placement&) = default;
};

/// Thrown by the localizer when there is nothing to enclose.
class EmptyMaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How the fixed-length z window is anchored.
enum class ZAnchor {
  Centroid,        // centred on the mean z of the foreground
  ExtentMidpoint,  // centred on the middle of the foreground's z extent
};

/// Tight x/y bounds of the z-projection plus a z window of length
/// min(z_extent, nz) anchored per `anchor` and clamped into the grid.
BBox bbox_xy(const Mask& mask, int z_extent, ZAnchor anchor = ZAnchor::Centroid);

/// Widens x/y by `margin` on each side, clamped to `host`; z is unchanged.
BBox expand_margin(const BBox& b, int margin, const Dims& host);

/// Shrinks x/y extents larger than `limit` symmetrically about their centre.
BBox limit_extent(const BBox& b, const Dims& limit);

template <typename T>
Grid<T> crop(const Grid<T>& grid, const BBox& b);

/// Centres `block` in an all-zero canvas at offset floor((canvas - dims) / 2).
template <typename T>
std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>& block, const Dims& canvas,
                                              const BBox& source_bbox, const Dims& source_dims);

/// Same, treating `block` as its own source.
template <typename T>
std::pair<Grid<T>, Placement> zero_pad_center(const Grid<T>& block, const Dims& canvas);

/// Inverse of crop + zero_pad_center: pulls the block back out of `pred` and
/// writes it into an all-zero grid of the original source dims.
template <typename T>
Grid<T> restore(const Grid<T>& pred, const Placement& p);

}  // namespace cranial
