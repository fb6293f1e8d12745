#pragma once

#include <cstddef>
#include <vector>

#include "cranial/grid.hpp"

namespace cranial {

enum class Connectivity { Six = 6, TwentySix = 26 };

struct Component {
  int label = 0;                 // 1-based label used in ComponentLabeling::labels
  std::size_t size = 0;          // voxel count
  std::size_t first_index = 0;   // smallest linear index in the component
};

/// Labels are ordered by decreasing size, ties broken by smallest linear
/// index. Background voxels carry label 0.
struct ComponentLabeling {
  LabelGrid labels;
  std::vector<Component> components;
};

ComponentLabeling connected_components(const Mask& mask, Connectivity connectivity = Connectivity::TwentySix);

/// Keeps only the largest component. Throws std::invalid_argument on an empty mask.
Mask largest_component(const Mask& mask, Connectivity connectivity = Connectivity::TwentySix);

/// Mask of the voxels carrying `label`.
Mask component_mask(const ComponentLabeling& labeling, int label);

}  // namespace cranial
