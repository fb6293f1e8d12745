#include "cranial/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "cranial/nrrd.hpp"
#include "cranial/rng.hpp"

namespace cranial {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Vec3 direction(double polar, double azimuth) {
  return {std::sin(polar) * std::cos(azimuth), std::sin(polar) * std::sin(azimuth), std::cos(polar)};
}

// Point on the shell mid-surface along `dir` from the phantom centre.
Vec3 mid_surface_point(const Phantom& ph, const Vec3& dir) {
  const double q = std::sqrt((dir.x / ph.radii.x) * (dir.x / ph.radii.x) + (dir.y / ph.radii.y) * (dir.y / ph.radii.y) +
                             (dir.z / ph.radii.z) * (dir.z / ph.radii.z));
  const double r_min = std::min({ph.radii.x, ph.radii.y, ph.radii.z});
  const double s = (1.0 - 0.5 * ph.thickness / r_min) / q;
  return {ph.center.x + s * dir.x, ph.center.y + s * dir.y, ph.center.z + s * dir.z};
}

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
Vec3 vec_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return json::parse(in);
}

}  // namespace

std::string to_string(Distribution d) {
  return d == Distribution::InDistribution ? "in_distribution" : "robustness";
}

Distribution distribution_from_string(const std::string& s) {
  if (s == "in_distribution") return Distribution::InDistribution;
  if (s == "robustness") return Distribution::Robustness;
  throw std::invalid_argument("unknown distribution '" + s + "'");
}

json to_json(const DatasetConfig& c) {
  return {
      {"dims", {c.dims.nx, c.dims.ny, c.dims.nz}},
      {"spacing", {c.spacing.x, c.spacing.y, c.spacing.z}},
      {"radii", vec_json(c.radii)},
      {"thickness", c.thickness},
      {"jitter", c.jitter},
      {"sphere_radius", {c.sphere_radius.min, c.sphere_radius.max}},
      {"superior_max_deg", c.superior_max_deg},
      {"ood_small", {c.ood_small.min, c.ood_small.max}},
      {"ood_large", {c.ood_large.min, c.ood_large.max}},
  };
}

DatasetConfig dataset_config_from_json(const json& j) {
  DatasetConfig c;
  if (j.contains("dims")) c.dims = {j["dims"][0], j["dims"][1], j["dims"][2]};
  if (j.contains("spacing")) c.spacing = {j["spacing"][0], j["spacing"][1], j["spacing"][2]};
  if (j.contains("radii")) c.radii = vec_from(j["radii"]);
  c.thickness = j.value("thickness", c.thickness);
  c.jitter = j.value("jitter", c.jitter);
  if (j.contains("sphere_radius")) c.sphere_radius = {j["sphere_radius"][0], j["sphere_radius"][1]};
  c.superior_max_deg = j.value("superior_max_deg", c.superior_max_deg);
  if (j.contains("ood_small")) c.ood_small = {j["ood_small"][0], j["ood_small"][1]};
  if (j.contains("ood_large")) c.ood_large = {j["ood_large"][0], j["ood_large"][1]};
  return c;
}

std::uint64_t case_seed(std::uint64_t seed, std::size_t index) {
  return mix_seed(mix_seed(seed) ^ static_cast<std::uint64_t>(index));
}

CaseTriple make_case(std::size_t index, Distribution dist, const DatasetConfig& config, std::uint64_t seed,
                     const std::string& split) {
  if (config.sphere_radius.min <= 0 || config.sphere_radius.max < config.sphere_radius.min ||
      config.ood_small.min <= 0 || config.ood_small.max < config.ood_small.min || config.ood_large.min <= 0 ||
      config.ood_large.max < config.ood_large.min) {
    throw std::invalid_argument("dataset config: empty or invalid defect size family");
  }
  const std::uint64_t cs = case_seed(seed, index);
  Rng rng(cs);

  PhantomParams pp;
  pp.radii = config.radii;
  pp.thickness = config.thickness;
  pp.dims = config.dims;
  pp.spacing = config.spacing;
  pp.jitter = config.jitter;
  pp.seed = mix_seed(cs + 1);
  const Phantom ph = make_phantom(pp);

  DefectSpec spec;
  spec.seed = cs;
  if (dist == Distribution::InDistribution) {
    const double cos_max = std::cos(config.superior_max_deg * kDeg);
    const double polar = std::acos(rng.uniform(cos_max, 1.0));
    const double azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Vec3 dir = direction(polar, azimuth);
    spec.shape = DefectShape::Sphere;
    spec.center = mid_surface_point(ph, dir);
    const double r = rng.uniform(config.sphere_radius.min, config.sphere_radius.max);
    spec.size = {r, r, r};
    spec.axis = dir;
  } else {
    spec.shape = rng.below(2) == 0 ? DefectShape::Box : DefectShape::Cylinder;
    double polar = 0.0, azimuth = 0.0;
    if (rng.below(2) == 0) {  // lateral, either side
      polar = rng.uniform(70.0, 100.0) * kDeg;
      azimuth = (rng.below(2) == 0 ? 0.0 : 180.0) * kDeg + rng.uniform(-20.0, 20.0) * kDeg;
    } else {  // posterior
      polar = rng.uniform(60.0, 95.0) * kDeg;
      azimuth = (-90.0 + rng.uniform(-25.0, 25.0)) * kDeg;
    }
    const Vec3 dir = direction(polar, azimuth);
    const SizeRange& range = rng.below(2) == 0 ? config.ood_small : config.ood_large;
    const double a = rng.uniform(range.min, range.max);
    const double depth = 2.0 * config.thickness;
    spec.center = mid_surface_point(ph, dir);
    spec.axis = dir;
    if (spec.shape == DefectShape::Box) {
      spec.size = {a, rng.uniform(range.min, a), depth};
      spec.roll = rng.uniform(0.0, std::numbers::pi);
    } else {
      spec.size = {a, a, depth};
    }
  }

  char id[64];
  std::snprintf(id, sizeof(id), "%s_%03zu", split.c_str(), index);
  return inject_defect(ph.mask, spec, id);
}

std::vector<CaseTriple> make_dataset(std::size_t n, Distribution dist, const DatasetConfig& config,
                                     std::uint64_t seed, const std::string& split) {
  if (n == 0) throw std::invalid_argument("make_dataset: need at least one case");
  std::vector<CaseTriple> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_case(i, dist, config, seed, split));
  return out;
}

json defect_to_json(const DefectSpec& d) {
  return {{"shape", to_string(d.shape)}, {"center", vec_json(d.center)}, {"size", vec_json(d.size)},
          {"axis", vec_json(d.axis)},    {"roll", d.roll},                 {"seed", d.seed}};
}

DefectSpec defect_from_json(const json& j) {
  DefectSpec d;
  d.shape = defect_shape_from_string(j.at("shape").get<std::string>());
  d.center = vec_from(j.at("center"));
  d.size = vec_from(j.at("size"));
  d.axis = vec_from(j.at("axis"));
  d.roll = j.value("roll", 0.0);
  d.seed = j.value("seed", std::uint64_t{0});
  return d;
}

void save_dataset(const fs::path& root, const std::vector<CaseTriple>& cases, const std::string& split,
                  Distribution dist, const DatasetConfig& config, std::uint64_t seed) {
  fs::create_directories(root);
  json listing = json::array();
  for (const auto& c : cases) {
    const fs::path dir = root / c.id;
    fs::create_directories(dir);
    save_nrrd(dir / "complete.nrrd", c.complete);
    save_nrrd(dir / "defective.nrrd", c.defective);
    save_nrrd(dir / "implant.nrrd", c.implant);
    write_json(dir / "case.json", {{"id", c.id},
                                   {"split", split},
                                   {"distribution", to_string(dist)},
                                   {"defect", defect_to_json(c.defect)},
                                   {"dataset_seed", seed}});
    listing.push_back({{"id", c.id}, {"split", split}});
  }
  write_json(root / "dataset.json", {{"distribution", to_string(dist)},
                                     {"seed", seed},
                                     {"split", split},
                                     {"config", to_json(config)},
                                     {"cases", listing}});
}

std::vector<CaseTriple> load_dataset(const fs::path& root) {
  const json manifest = read_json(root / "dataset.json");
  std::vector<CaseTriple> out;
  for (const auto& entry : manifest.at("cases")) {
    const std::string id = entry.at("id").get<std::string>();
    const fs::path dir = root / id;
    const json meta = read_json(dir / "case.json");
    out.push_back({id, load_mask(dir / "defective.nrrd"), load_mask(dir / "implant.nrrd"),
                   load_mask(dir / "complete.nrrd"), defect_from_json(meta.at("defect"))});
  }
  return out;
}

}  // namespace cranial
