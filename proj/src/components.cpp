#include "cranial/components.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>

namespace cranial {

namespace {

// Union-find over provisional labels; roots are the smallest member.
class DisjointSets {
 public:
  std::size_t make() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

 private:
  std::vector<std::size_t> parent_;
};

// Offsets of neighbours that precede a voxel in raster order.
std::vector<std::array<int, 3>> backward_neighbours(Connectivity c) {
  std::vector<std::array<int, 3>> out;
  for (int dz = -1; dz <= 0; ++dz) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (c == Connectivity::Six && manhattan != 1) continue;
        out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

}  // namespace

ComponentLabeling connected_components(const Mask& mask, Connectivity connectivity) {
  const Dims d = mask.dims();
  LabelGrid provisional(d, mask.spacing(), 0);
  DisjointSets sets;
  sets.make();  // slot 0 = background
  const auto neighbours = backward_neighbours(connectivity);

  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (mask(x, y, z) == 0) continue;
        std::size_t label = 0;
        for (const auto& o : neighbours) {
          const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
          if (!mask.contains(nx, ny, nz)) continue;
          const auto n = static_cast<std::size_t>(provisional(nx, ny, nz));
          if (n == 0) continue;
          if (label == 0) {
            label = n;
          } else {
            sets.unite(label, n);
          }
        }
        if (label == 0) label = sets.make();
        provisional(x, y, z) = static_cast<std::int32_t>(label);
      }
    }
  }

  // Resolve roots and gather sizes plus first occurrence.
  std::vector<std::size_t> root_size;
  std::vector<std::size_t> root_first;
  std::vector<std::int32_t> root_of(provisional.size(), 0);
  std::vector<std::size_t> compact;  // provisional root -> dense id + 1
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    const auto p = static_cast<std::size_t>(provisional[i]);
    if (p == 0) continue;
    const std::size_t r = sets.find(p);
    if (compact.size() <= r) compact.resize(r + 1, 0);
    if (compact[r] == 0) {
      root_size.push_back(0);
      root_first.push_back(i);
      compact[r] = root_size.size();
    }
    const std::size_t id = compact[r] - 1;
    ++root_size[id];
    root_of[i] = static_cast<std::int32_t>(id);
  }

  std::vector<std::size_t> order(root_size.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (root_size[a] != root_size[b]) return root_size[a] > root_size[b];
    return root_first[a] < root_first[b];
  });
  std::vector<std::int32_t> final_label(order.size());
  ComponentLabeling result{LabelGrid(d, mask.spacing(), 0), {}};
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    final_label[order[rank]] = static_cast<std::int32_t>(rank + 1);
    result.components.push_back({static_cast<int>(rank + 1), root_size[order[rank]], root_first[order[rank]]});
  }
  for (std::size_t i = 0; i < provisional.size(); ++i) {
    if (provisional[i] != 0) result.labels[i] = final_label[static_cast<std::size_t>(root_of[i])];
  }
  return result;
}

Mask component_mask(const ComponentLabeling& labeling, int label) {
  Mask out(labeling.labels.dims(), labeling.labels.spacing());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = labeling.labels[i] == label ? 1 : 0;
  return out;
}

Mask largest_component(const Mask& mask, Connectivity connectivity) {
  auto labeling = connected_components(mask, connectivity);
  if (labeling.components.empty()) throw std::invalid_argument("largest_component: mask is empty");
  return component_mask(labeling, 1);
}

}  // namespace cranial
