#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "cranial/grid.hpp"

namespace cranial {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// Raised when a skull cannot be produced from the input (e.g. nothing above
/// the bone threshold, or a defect that misses the bone).
class SkullError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bone mask from a CT volume: threshold at `hu_min` and keep the largest
/// 26-connected body, which drops the table head holder.
Mask extract_skull(const HuVolume& ct, std::int16_t hu_min = 150);

enum class DefectShape { Sphere, Box, Cylinder };

std::string to_string(DefectShape s);
DefectShape defect_shape_from_string(const std::string& s);

/// Region removed from a complete skull.
///
/// Sphere: radius `size.x`. Box: half extents `size` in a frame whose third
/// axis is `axis`, rotated by `roll` radians about it. Cylinder: radius
/// `size.x`, half length `size.z` along `axis`. Coordinates are voxel units.
struct DefectSpec {
  DefectShape shape = DefectShape::Sphere;
  Vec3 center;
  Vec3 size{1.0, 1.0, 1.0};
  Vec3 axis{0.0, 0.0, 1.0};
  double roll = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const DefectSpec&, const DefectSpec&) = default;
};

/// True when voxel centre `p` lies inside the defect region.
bool defect_contains(const DefectSpec& spec, const Vec3& p);

/// Rasterised defect region on a grid of `dims`.
Mask defect_region(const DefectSpec& spec, const Dims& dims, const Spacing& spacing = {});

/// (defective, implant, complete) with defective | implant == complete and
/// defective & implant == 0.
struct CaseTriple {
  std::string id;
  Mask defective;
  Mask implant;
  Mask complete;
  DefectSpec defect;
};

/// Cuts `spec` out of `complete`. Throws SkullError if the region misses the bone.
CaseTriple inject_defect(const Mask& complete, const DefectSpec& spec, std::string id = "case");

/// Empty string when the triple satisfies its invariants, else the first violation.
std::string check_case(const CaseTriple& c);

struct PhantomParams {
  Vec3 radii{10.0, 10.0, 10.0};  // outer semi-axes, voxels
  double thickness = 2.0;        // shell thickness along the shortest axis, voxels
  Dims dims{32, 32, 32};
  Spacing spacing{};
  std::uint64_t seed = 0;
  double jitter = 0.05;          // max relative radius perturbation
};

/// Geometry actually used for a phantom (radii after perturbation).
struct Phantom {
  Mask mask;
  Vec3 center;
  Vec3 radii;
  double thickness = 0.0;
};

/// Normalised ellipsoid radius of `p`.
double ellipsoid_rho(const Vec3& p, const Vec3& center, const Vec3& radii);

/// Hollow ellipsoidal shell: foreground iff 1 - t / r_min <= rho <= 1.
Phantom make_phantom(const PhantomParams& params);
Mask synth_skull_phantom(const PhantomParams& params);

/// Intensity volume around a skull mask: bone ~1000 HU, background -1000 HU,
/// plus (optionally) a 300 HU table bar below the head.
HuVolume synth_ct(const Mask& skull, bool with_table, std::uint64_t seed);

}  // namespace cranial
