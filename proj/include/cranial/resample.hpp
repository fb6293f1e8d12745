#pragma once

#include <vector>

#include "cranial/grid.hpp"

namespace cranial {

/// Source index sampled for target index `i` when resampling an axis of
/// length `from` onto `to` voxels: floor((i + 0.5) * from / to).
int nearest_source_index(int i, int from, int to);

/// Nearest-neighbour downsampling on the half-voxel-centred coordinate map.
/// Spacing is rescaled so the physical extent is unchanged.
template <typename T>
Grid<T> downsample(const Grid<T>& grid, Dims target);

/// Quadratic B-spline coefficients of `samples` under whole-sample mirror
/// boundary conditions, so that the spline interpolates the samples.
std::vector<double> spline2_coefficients(const std::vector<double>& samples);

/// Value of the centred quadratic B-spline at `t`.
double bspline2(double t);

/// Quadratic-spline interpolation onto a finer lattice. Target voxel i maps
/// to source coordinate (i + 0.5) * from / to - 0.5; results are clamped to
/// [0,1].
template <typename T>
ProbabilityMap upsample_spline2(const Grid<T>& grid, Dims target);

}  // namespace cranial
