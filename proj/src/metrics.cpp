#include "cranial/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace cranial {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_dims(const Mask& a, const Mask& b) {
  if (a.dims() != b.dims()) {
    throw ShapeError("metric inputs differ in dims: " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
}

// Lower envelope of sampled parabolas: out[q] = min_p (w (q - p))^2 + f[p].
void distance_1d(const double* f, std::size_t n, std::size_t stride, double w, double* out,
                 std::vector<std::size_t>& v, std::vector<double>& z, std::vector<double>& tmp) {
  const double w2 = w * w;
  tmp.resize(n);
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  bool any = false;
  for (std::size_t q = 0; q < n; ++q) {
    const double fq = f[q * stride];
    if (fq == kInf) continue;
    if (!any) {
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      any = true;
      continue;
    }
    double s = 0.0;
    while (true) {
      const std::size_t p = v[k];
      const double fp = f[p * stride];
      const auto qd = static_cast<double>(q), pd = static_cast<double>(p);
      s = ((fq + w2 * qd * qd) - (fp + w2 * pd * pd)) / (2.0 * w2 * (qd - pd));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates the first one everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (!any) {
    for (std::size_t q = 0; q < n; ++q) tmp[q] = kInf;
  } else {
    std::size_t j = 0;
    for (std::size_t q = 0; q < n; ++q) {
      while (z[j + 1] < static_cast<double>(q)) ++j;
      const double d = w * (static_cast<double>(q) - static_cast<double>(v[j]));
      tmp[q] = d * d + f[v[j] * stride];
    }
  }
  for (std::size_t q = 0; q < n; ++q) out[q * stride] = tmp[q];
}

}  // namespace

OverlapCounts overlap_counts(const Mask& pred, const Mask& truth) {
  require_same_dims(pred, truth);
  OverlapCounts c;
  c.total = pred.size();
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = truth[i] != 0;
    c.pred += p;
    c.truth += g;
    c.intersection += p && g;
  }
  return c;
}

double dsc(const OverlapCounts& c) {
  if (c.pred + c.truth == 0) return 1.0;
  return 2.0 * static_cast<double>(c.intersection) / static_cast<double>(c.pred + c.truth);
}

double dsc(const Mask& pred, const Mask& truth) { return dsc(overlap_counts(pred, truth)); }

double reconstruction_error(const OverlapCounts& c) {
  return static_cast<double>(c.pred + c.truth - 2 * c.intersection) / static_cast<double>(c.total);
}

double reconstruction_error(const Mask& pred, const Mask& truth) {
  return reconstruction_error(overlap_counts(pred, truth));
}

std::vector<double> squared_distance_map(const Mask& mask, const Spacing& spacing) {
  const Dims d = mask.dims();
  const auto nx = static_cast<std::size_t>(d.nx), ny = static_cast<std::size_t>(d.ny),
             nz = static_cast<std::size_t>(d.nz);
  std::vector<double> dist(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) dist[i] = mask[i] ? 0.0 : kInf;

  std::vector<std::size_t> v;
  std::vector<double> z, tmp;
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      double* line = dist.data() + (k * ny + j) * nx;
      distance_1d(line, nx, 1, spacing.x, line, v, z, tmp);
    }
  }
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t i = 0; i < nx; ++i) {
      double* line = dist.data() + k * ny * nx + i;
      distance_1d(line, ny, nx, spacing.y, line, v, z, tmp);
    }
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      double* line = dist.data() + j * nx + i;
      distance_1d(line, nz, nx * ny, spacing.z, line, v, z, tmp);
    }
  }
  return dist;
}

double directed_hausdorff_mm(const Mask& from, const Mask& to, const Spacing& spacing) {
  require_same_dims(from, to);
  if (count_foreground(from) == 0 || count_foreground(to) == 0) {
    throw UndefinedDistance("Hausdorff distance is undefined for an empty mask");
  }
  const auto dist = squared_distance_map(to, spacing);
  double worst = 0.0;
  for (std::size_t i = 0; i < from.size(); ++i) {
    if (from[i] && dist[i] > worst) worst = dist[i];
  }
  return std::sqrt(worst);
}

double hausdorff_mm(const Mask& pred, const Mask& truth, const Spacing& spacing) {
  return std::max(directed_hausdorff_mm(pred, truth, spacing), directed_hausdorff_mm(truth, pred, spacing));
}

}  // namespace cranial
