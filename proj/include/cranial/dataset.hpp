#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cranial/skull.hpp"

namespace cranial {

enum class Distribution { InDistribution, Robustness };

std::string to_string(Distribution d);
Distribution distribution_from_string(const std::string& s);

/// Size range of a defect family, in voxels.
struct SizeRange {
  double min = 0.0;
  double max = 0.0;
};

/// Phantom geometry plus the two defect families.
///
/// In-distribution defects are spheres centred on the shell mid-surface at a
/// polar angle of at most `superior_max_deg` from the vertex. The robustness
/// family uses boxes and cylinders drilled radially through the shell at
/// lateral or posterior positions, with sizes from `ood_small` or
/// `ood_large`, all disjoint from the in-distribution radius range.
struct DatasetConfig {
  Dims dims{128, 128, 128};
  Spacing spacing{1.8, 1.8, 1.8};
  Vec3 radii{50.0, 56.0, 46.0};
  double thickness = 8.0;
  double jitter = 0.05;

  SizeRange sphere_radius{13.0, 17.0};
  double superior_max_deg = 30.0;

  SizeRange ood_small{6.0, 9.0};
  SizeRange ood_large{20.0, 24.0};
};

nlohmann::json to_json(const DatasetConfig& c);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

/// Seed used for case `index` of a dataset seeded with `seed`.
std::uint64_t case_seed(std::uint64_t seed, std::size_t index);

/// Case `index` of the dataset; a pure function of its arguments.
CaseTriple make_case(std::size_t index, Distribution dist, const DatasetConfig& config, std::uint64_t seed,
                     const std::string& split = "train");

/// `n` cases with ids "<split>_000", "<split>_001", ...
std::vector<CaseTriple> make_dataset(std::size_t n, Distribution dist, const DatasetConfig& config,
                                     std::uint64_t seed, const std::string& split = "train");

nlohmann::json defect_to_json(const DefectSpec& d);
DefectSpec defect_from_json(const nlohmann::json& j);

/// On-disk layout: `<root>/<id>/{complete,defective,implant}.nrrd` plus
/// `case.json`, and `<root>/dataset.json` listing ids and splits.
void save_dataset(const std::filesystem::path& root, const std::vector<CaseTriple>& cases,
                  const std::string& split, Distribution dist, const DatasetConfig& config, std::uint64_t seed);
std::vector<CaseTriple> load_dataset(const std::filesystem::path& root);

}  // namespace cranial
