#pragma once

#include <cstddef>
#include <stdexcept>

#include "cranial/grid.hpp"

namespace cranial {

/// Voxel counts shared by DSC and RE.
struct OverlapCounts {
  std::size_t pred = 0;          // |P|
  std::size_t truth = 0;         // |G|
  std::size_t intersection = 0;  // |P & G|
  std::size_t total = 0;         // N
};

OverlapCounts overlap_counts(const Mask& pred, const Mask& truth);

/// 2|P&G| / (|P| + |G|); 1 when both masks are empty.
double dsc(const Mask& pred, const Mask& truth);
double dsc(const OverlapCounts& c);

/// Fraction of voxels where the masks disagree.
double reconstruction_error(const Mask& pred, const Mask& truth);
double reconstruction_error(const OverlapCounts& c);

class UndefinedDistance : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Squared Euclidean distance (mm^2) from every voxel centre to the nearest
/// foreground voxel centre of `mask`, under `spacing`. Exact separable
/// transform; infinity everywhere if the mask is empty.
std::vector<double> squared_distance_map(const Mask& mask, const Spacing& spacing);

/// max over p in `from` of the distance to the nearest voxel of `to`, in mm.
double directed_hausdorff_mm(const Mask& from, const Mask& to, const Spacing& spacing);

/// Symmetric Hausdorff distance between the foreground voxel centres, in mm.
/// Throws UndefinedDistance if either mask is empty.
double hausdorff_mm(const Mask& pred, const Mask& truth, const Spacing& spacing);

}  // namespace cranial
