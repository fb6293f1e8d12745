#include "cranial/skull.hpp"

#include <algorithm>
#include <cmath>

#include "cranial/components.hpp"
#include "cranial/rng.hpp"

namespace cranial {

namespace {

double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
Vec3 sub(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
Vec3 normalized(const Vec3& v) {
  const double n = std::sqrt(dot(v, v));
  if (n == 0.0) throw SkullError("defect axis must be non-zero");
  return {v.x / n, v.y / n, v.z / n};
}

// Orthonormal frame (u, v, w) with w = axis, rotated by roll about w.
void frame(const Vec3& axis, double roll, Vec3& u, Vec3& v, Vec3& w) {
  w = normalized(axis);
  const Vec3 helper = std::abs(w.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 u0 = normalized(cross(helper, w));
  const Vec3 v0 = cross(w, u0);
  const double c = std::cos(roll), s = std::sin(roll);
  u = {c * u0.x + s * v0.x, c * u0.y + s * v0.y, c * u0.z + s * v0.z};
  v = cross(w, u);
}

}  // namespace

Mask extract_skull(const HuVolume& ct, std::int16_t hu_min) {
  const Mask bone = threshold(ct, hu_min);
  if (count_foreground(bone) == 0) {
    throw SkullError("extract_skull: no voxel reaches " + std::to_string(hu_min) + " HU, empty skull");
  }
  return largest_component(bone, Connectivity::TwentySix);
}

std::string to_string(DefectShape s) {
  switch (s) {
    case DefectShape::Sphere: return "sphere";
    case DefectShape::Box: return "box";
    case DefectShape::Cylinder: return "cylinder";
  }
  return "unknown";
}

DefectShape defect_shape_from_string(const std::string& s) {
  if (s == "sphere") return DefectShape::Sphere;
  if (s == "box") return DefectShape::Box;
  if (s == "cylinder") return DefectShape::Cylinder;
  throw SkullError("unknown defect shape '" + s + "'");
}

bool defect_contains(const DefectSpec& spec, const Vec3& p) {
  const Vec3 d = sub(p, spec.center);
  switch (spec.shape) {
    case DefectShape::Sphere:
      return dot(d, d) <= spec.size.x * spec.size.x;
    case DefectShape::Box: {
      Vec3 u, v, w;
      frame(spec.axis, spec.roll, u, v, w);
      return std::abs(dot(d, u)) <= spec.size.x && std::abs(dot(d, v)) <= spec.size.y &&
             std::abs(dot(d, w)) <= spec.size.z;
    }
    case DefectShape::Cylinder: {
      const Vec3 w = normalized(spec.axis);
      const double along = dot(d, w);
      const double radial2 = dot(d, d) - along * along;
      return std::abs(along) <= spec.size.z && radial2 <= spec.size.x * spec.size.x;
    }
  }
  return false;
}

Mask defect_region(const DefectSpec& spec, const Dims& dims, const Spacing& spacing) {
  if (spec.size.x <= 0.0 || spec.size.y <= 0.0 || spec.size.z <= 0.0) {
    throw SkullError("defect size must be positive");
  }
  Mask region(dims, spacing);
  for (int z = 0; z < dims.nz; ++z) {
    for (int y = 0; y < dims.ny; ++y) {
      for (int x = 0; x < dims.nx; ++x) {
        region(x, y, z) = defect_contains(spec, {double(x), double(y), double(z)}) ? 1 : 0;
      }
    }
  }
  return region;
}

CaseTriple inject_defect(const Mask& complete, const DefectSpec& spec, std::string id) {
  const Dims d = complete.dims();
  if (spec.center.x < 0 || spec.center.y < 0 || spec.center.z < 0 || spec.center.x > d.nx - 1 ||
      spec.center.y > d.ny - 1 || spec.center.z > d.nz - 1) {
    throw SkullError("inject_defect: defect centre lies outside the volume");
  }
  if (count_foreground(complete) == 0) throw SkullError("inject_defect: complete skull is empty");
  const Mask region = defect_region(spec, d, complete.spacing());
  CaseTriple c{std::move(id), mask_and_not(complete, region), mask_and(complete, region), complete, spec};
  if (count_foreground(c.implant) == 0) {
    throw SkullError("inject_defect: defect region does not intersect the skull");
  }
  return c;
}

std::string check_case(const CaseTriple& c) {
  if (c.defective.dims() != c.complete.dims() || c.implant.dims() != c.complete.dims()) {
    return "dims differ";
  }
  if (!is_binary(c.defective) || !is_binary(c.implant) || !is_binary(c.complete)) return "non-binary mask";
  std::size_t implant_voxels = 0;
  for (std::size_t i = 0; i < c.complete.size(); ++i) {
    if (c.defective[i] && c.implant[i]) return "defective and implant overlap";
    if ((c.defective[i] | c.implant[i]) != c.complete[i]) return "defective | implant != complete";
    implant_voxels += c.implant[i];
  }
  if (implant_voxels == 0) return "implant is empty";
  return {};
}

double ellipsoid_rho(const Vec3& p, const Vec3& center, const Vec3& radii) {
  const double dx = (p.x - center.x) / radii.x;
  const double dy = (p.y - center.y) / radii.y;
  const double dz = (p.z - center.z) / radii.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Phantom make_phantom(const PhantomParams& params) {
  if (params.thickness < 1.0) throw SkullError("phantom: shell thickness must be >= 1 voxel");
  if (params.radii.x <= 0 || params.radii.y <= 0 || params.radii.z <= 0) {
    throw SkullError("phantom: radii must be positive");
  }
  if (params.jitter < 0.0 || params.jitter > 0.05) throw SkullError("phantom: jitter must lie in [0, 0.05]");
  if (!params.dims.positive()) throw SkullError("phantom: dims must be positive");

  Rng rng(params.seed);
  auto perturb = [&](double r) { return r * (1.0 + params.jitter * (2.0 * rng.uniform() - 1.0)); };
  const Vec3 radii{perturb(params.radii.x), perturb(params.radii.y), perturb(params.radii.z)};
  const double max_r = std::max({radii.x, radii.y, radii.z});
  const int min_dim = std::min({params.dims.nx, params.dims.ny, params.dims.nz});
  if (2.0 * max_r >= min_dim) throw SkullError("phantom: ellipsoid does not fit inside the volume");

  const Vec3 center{(params.dims.nx - 1) / 2.0, (params.dims.ny - 1) / 2.0, (params.dims.nz - 1) / 2.0};
  const double r_min = std::min({radii.x, radii.y, radii.z});
  const double inner = 1.0 - params.thickness / r_min;

  Mask m(params.dims, params.spacing);
  for (int z = 0; z < params.dims.nz; ++z) {
    for (int y = 0; y < params.dims.ny; ++y) {
      for (int x = 0; x < params.dims.nx; ++x) {
        const double rho = ellipsoid_rho({double(x), double(y), double(z)}, center, radii);
        m(x, y, z) = (rho >= inner && rho <= 1.0) ? 1 : 0;
      }
    }
  }
  return {std::move(m), center, radii, params.thickness};
}

Mask synth_skull_phantom(const PhantomParams& params) { return make_phantom(params).mask; }

HuVolume synth_ct(const Mask& skull, bool with_table, std::uint64_t seed) {
  const Dims d = skull.dims();
  HuVolume ct(d, skull.spacing());
  Rng rng(seed);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    const double noise = rng.uniform(-20.0, 20.0);
    ct[i] = static_cast<std::int16_t>(skull[i] ? 1000.0 + 10.0 * noise : -1000.0 + noise);
  }
  if (!with_table) return ct;

  int y_min = d.ny;
  int x_lo = d.nx, x_hi = -1, z_lo = d.nz, z_hi = -1;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (!skull(x, y, z)) continue;
        y_min = std::min(y_min, y);
        x_lo = std::min(x_lo, x);
        x_hi = std::max(x_hi, x);
        z_lo = std::min(z_lo, z);
        z_hi = std::max(z_hi, z);
      }
    }
  }
  if (x_hi < 0) throw SkullError("synth_ct: empty skull");
  if (y_min < 2) throw SkullError("synth_ct: no room for the table below the skull");
  // Bar up to two voxels thick, one voxel of air away from the bone.
  for (int z = z_lo; z <= z_hi; ++z) {
    for (int y = std::max(0, y_min - 3); y < y_min - 1; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) ct(x, y, z) = static_cast<std::int16_t>(300 + rng.uniform(-20.0, 20.0));
    }
  }
  return ct;
}

}  // namespace cranial
