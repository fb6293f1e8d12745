#include <random>
#include <string>

#include "doctest.h"
#include "oracles.hpp"

#include "cranial/bbox.hpp"
#include "cranial/components.hpp"
#include "cranial/nrrd.hpp"
#include "cranial/resample.hpp"

using namespace cranial;

namespace {

Bytes bytes_of(const std::string& header, const std::vector<std::uint8_t>& payload) {
  Bytes b(header.begin(), header.end());
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

NrrdError::Kind error_kind(const Bytes& b) {
  try {
    read_nrrd(b);
  } catch (const NrrdError& e) {
    return e.kind();
  }
  FAIL("expected an NrrdError");
  return NrrdError::Kind::Io;
}

}  // namespace

TEST_CASE("grid validates dims, spacing and data length") {
  CHECK_THROWS_AS(Mask({0, 2, 2}, {}, 0), ShapeError);
  CHECK_THROWS_AS(Mask({2, 2, 2}, {1.0, -1.0, 1.0}, 0), ShapeError);
  CHECK_THROWS_AS(Mask({2, 2, 2}, {}, std::vector<std::uint8_t>(7)), ShapeError);
  Mask m({3, 4, 5}, {}, 0);
  CHECK(m.index(1, 2, 3) == 1 + 3 * (2 + 4 * 3));
  CHECK(m.size() == 60);
}

TEST_CASE("threshold and binarize are inclusive") {
  CHECK(count_foreground(threshold(HuVolume({4, 4, 4}, {}, 149))) == 0);
  CHECK(count_foreground(threshold(HuVolume({4, 4, 4}, {}, 150))) == 64);
  CHECK(count_foreground(binarize(ProbabilityMap({3, 3, 3}, {}, 0.49))) == 0);
  CHECK(count_foreground(binarize(ProbabilityMap({3, 3, 3}, {}, 0.5))) == 27);

  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> hu(-1024, 3000);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HuVolume ct({7, 6, 5}, {}, 0);
  ProbabilityMap p({7, 6, 5}, {}, 0.0);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    ct[i] = static_cast<std::int16_t>(hu(gen));
    p[i] = u(gen);
  }
  const Mask t = threshold(ct), b = binarize(p, 0.3);
  for (std::size_t i = 0; i < ct.size(); ++i) {
    CHECK(t[i] == (ct[i] >= 150 ? 1 : 0));
    CHECK(b[i] == (p[i] >= 0.3 ? 1 : 0));
  }
}

TEST_CASE("nrrd reads a hand-written header") {
  const auto b = bytes_of("NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 2 2\nencoding: raw\nspacings: 1 1 1\n\n",
                          {0, 1, 0, 0, 0, 0, 0, 1});
  const Mask m = to_mask(read_nrrd(b));
  CHECK(m.dims() == Dims{2, 2, 2});
  CHECK(count_foreground(m) == 2);
  CHECK(m(1, 0, 0) == 1);
  CHECK(m(1, 1, 1) == 1);
}

TEST_CASE("nrrd honours big-endian payloads and space directions") {
  const auto b = bytes_of(
      "NRRD0005\n# comment\ntype: short\ndimension: 3\nsizes: 2 1 1\nendian: big\nencoding: raw\n"
      "space: left-posterior-superior\nspace directions: (0.5,0,0) (0,2,0) (0,0,3)\nkey:=value\n\n",
      {0x01, 0x02, 0xff, 0xfe});
  const NrrdImage img = read_nrrd(b);
  CHECK(img.scalar == NrrdScalar::Int16);
  CHECK(img.voxels[0] == 0x0102);
  CHECK(img.voxels[1] == -2);
  CHECK(img.voxels.spacing().x == 0.5);
  CHECK(img.voxels.spacing().z == 3.0);
}

TEST_CASE("nrrd errors name the offending field") {
  const std::string tail = "encoding: raw\nspacings: 1 1 1\n\n";
  CHECK(error_kind(bytes_of("NRRD0004\ntype: uint8\ndimension: 2\nsizes: 4 4\n" + tail, std::vector<std::uint8_t>(16))) ==
        NrrdError::Kind::UnsupportedDimension);
  CHECK(error_kind(bytes_of("NRRD0004\ntype: float\ndimension: 3\nsizes: 1 1 1\n" + tail, {0, 0, 0, 0})) ==
        NrrdError::Kind::UnsupportedType);
  CHECK(error_kind(bytes_of("NRRD0004\ntype: uint8\ndimension: 3\nsizes: 1 1 1\nencoding: bzip2\nspacings: 1 1 1\n\n",
                            {0})) == NrrdError::Kind::UnsupportedEncoding);
  CHECK(error_kind(bytes_of("NRRD0004\ntype: uint8\ndimension: 3\nsizes: 2 1 1\n" + tail, {0})) ==
        NrrdError::Kind::DataLengthMismatch);
  CHECK(error_kind(bytes_of("PNG\n", {})) == NrrdError::Kind::MalformedHeader);
  CHECK(error_kind(bytes_of("NRRD0004\ntype: uint8\nsizes: 1 1 1\n" + tail, {0})) == NrrdError::Kind::MissingField);
  try {
    read_nrrd(bytes_of("NRRD0004\ntype: uint8\ndimension: 2\nsizes: 4 4\n" + tail, std::vector<std::uint8_t>(16)));
  } catch (const NrrdError& e) {
    CHECK(e.field() == "dimension");
  }
}

TEST_CASE("nrrd write is deterministic and round-trips") {
  const Mask one({1, 1, 1}, {1.0, 1.0, 1.0}, 1);
  const Bytes b = write_nrrd(one);
  const std::string text(b.begin(), b.end());
  CHECK(text.find("sizes: 1 1 1\n") != std::string::npos);
  CHECK(text.substr(text.find("\n\n") + 2).size() == 1);
  CHECK(write_nrrd(one) == b);

  std::mt19937_64 gen(12);
  std::uniform_int_distribution<int> n(1, 6), hu(-32768, 32767);
  std::uniform_real_distribution<double> sp(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Dims d{n(gen), n(gen), n(gen)};
    const Spacing s{sp(gen), sp(gen), sp(gen)};
    Mask m = oracle::random_mask(gen, d, 0.4);
    m.set_spacing(s);
    CHECK(to_mask(read_nrrd(write_nrrd(m))) == m);
    HuVolume h(d, s, 0);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = static_cast<std::int16_t>(hu(gen));
    CHECK(to_hu(read_nrrd(write_nrrd(h))) == h);
  }
}

TEST_CASE("nearest downsampling") {
  const Mask ones({8, 8, 8}, {}, 1);
  CHECK(count_foreground(downsample(ones, {4, 4, 4})) == 64);

  std::mt19937_64 gen(13);
  const Mask r = oracle::random_mask(gen, {5, 6, 7}, 0.5);
  CHECK(downsample(r, r.dims()) == r);

  Mask checker({8, 8, 8}, {1.0, 1.0, 1.0}, 0);
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) checker(x, y, z) = (x + y + z) % 2;
  const Dims target{4, 3, 5};
  const Mask small = downsample(checker, target);
  CHECK(small.spacing().x == 2.0);
  for (int z = 0; z < target.nz; ++z)
    for (int y = 0; y < target.ny; ++y)
      for (int x = 0; x < target.nx; ++x) {
        const int sx = (2 * x + 1) * 8 / (2 * target.nx), sy = (2 * y + 1) * 8 / (2 * target.ny),
                  sz = (2 * z + 1) * 8 / (2 * target.nz);
        CHECK(small(x, y, z) == checker(sx, sy, sz));
      }
  CHECK_THROWS_AS(downsample(checker, {0, 4, 4}), ShapeError);
}

TEST_CASE("quadratic spline upsampling") {
  CHECK(count_foreground(binarize(upsample_spline2(Mask({3, 4, 2}, {}, 1), {9, 8, 7}), 1.0)) == 9 * 8 * 7);
  const ProbabilityMap flat = upsample_spline2(Mask({3, 4, 2}, {}, 1), {9, 8, 7});
  for (double v : flat.values()) CHECK(v == doctest::Approx(1.0));

  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbabilityMap p({5, 4, 3}, {}, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(gen);
  const ProbabilityMap same = upsample_spline2(p, p.dims());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(same[i] - p[i]) <= 1e-9);

  // Ramp along x, extruded. The oracle solves the interpolation system densely
  // on a mirrored extension, then evaluates the B-spline sum directly.
  const int n = 6, m = 12;
  ProbabilityMap ramp({n, 2, 2}, {}, 0.0);
  for (int z = 0; z < 2; ++z)
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < n; ++x) ramp(x, y, z) = 0.1 + 0.15 * x;
  const ProbabilityMap up = upsample_spline2(ramp, {m, 2, 2});

  auto mirror = [n](int k) {
    const int period = 2 * (n - 1);
    k = ((k % period) + period) % period;
    return k < n ? k : period - k;
  };
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int k = i - 2; k <= i + 2; ++k) a[i][mirror(k)] += bspline2(static_cast<double>(i - k));
    a[i][n] = ramp(i, 0, 0);
  }
  for (int c = 0; c < n; ++c) {  // Gauss-Jordan with partial pivoting
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> coef(n);
  for (int i = 0; i < n; ++i) coef[i] = a[i][n] / a[i][i];
  for (int i = 0; i < m; ++i) {
    const double t = (i + 0.5) * n / m - 0.5;
    double v = 0.0;
    for (int k = static_cast<int>(std::floor(t)) - 2; k <= static_cast<int>(std::floor(t)) + 3; ++k) {
      v += coef[mirror(k)] * bspline2(t - k);
    }
    CHECK(std::abs(up(i, 1, 1) - std::clamp(v, 0.0, 1.0)) <= 1e-6);
  }
}

TEST_CASE("connected components") {
  Mask two({8, 8, 8}, {}, 0);
  two(0, 0, 0) = 1;
  two(5, 5, 5) = 1;
  const ComponentLabeling l = connected_components(two);
  REQUIRE(l.components.size() == 2);
  CHECK(l.components[0].size == 1);
  CHECK(l.components[0].first_index == 0);

  CHECK(connected_components(Mask({4, 4, 4}, {}, 1)).components.size() == 1);
  CHECK(connected_components(Mask({4, 4, 4}, {}, 0)).components.empty());

  std::mt19937_64 gen(15);
  for (int connectivity : {6, 26}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Mask m = oracle::random_mask(gen, {16, 16, 16}, 0.25 + 0.02 * trial);
      const auto mine = connected_components(m, static_cast<Connectivity>(connectivity));
      const auto ref = oracle::flood_fill(m, connectivity);
      REQUIRE(mine.components.size() == ref.sizes.size());
      // Same partition: labels correspond one-to-one.
      std::vector<int> map(ref.sizes.size(), -1);
      bool partition = true;
      for (std::size_t i = 0; i < m.size(); ++i) {
        if (!m[i]) {
          partition &= mine.labels[i] == 0;
          continue;
        }
        int& slot = map[static_cast<std::size_t>(ref.id[i])];
        if (slot < 0) slot = mine.labels[i];
        partition &= slot == mine.labels[i];
      }
      CHECK(partition);
      auto sizes = ref.sizes;
      std::sort(sizes.rbegin(), sizes.rend());
      for (std::size_t c = 0; c < sizes.size(); ++c) CHECK(mine.components[c].size == sizes[c]);
      for (std::size_t c = 1; c < mine.components.size(); ++c) {
        const auto& a = mine.components[c - 1];
        const auto& b = mine.components[c];
        CHECK((a.size > b.size || (a.size == b.size && a.first_index < b.first_index)));
      }
    }
  }
}

TEST_CASE("largest component") {
  Mask scene({20, 12, 12}, {}, 0);
  for (int z = 1; z < 6; ++z)
    for (int y = 1; y < 6; ++y)
      for (int x = 1; x < 5; ++x) scene(x, y, z) = 1;  // 100 voxels
  for (int x = 8; x < 18; ++x)
    for (int y = 8; y < 10; ++y)
      for (int z = 8; z < 10; ++z) scene(x, y, z) = 1;  // 40 voxels
  const Mask keep = largest_component(scene);
  CHECK(count_foreground(keep) == 100);
  CHECK(keep(1, 1, 1) == 1);
  CHECK(keep(8, 8, 8) == 0);
  CHECK(largest_component(keep) == keep);
  CHECK_THROWS(largest_component(Mask({3, 3, 3}, {}, 0)));

  std::mt19937_64 gen(16);
  for (int trial = 0; trial < 10; ++trial) {
    const Mask m = oracle::random_mask(gen, {12, 12, 12}, 0.3);
    const auto ref = oracle::flood_fill(m, 26);
    const auto best = std::max_element(ref.sizes.begin(), ref.sizes.end()) - ref.sizes.begin();
    const Mask got = largest_component(m);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(got[i] == (ref.id[i] == best ? 1 : 0));
  }
}

TEST_CASE("bbox_xy tightness and z window") {
  Mask point({16, 16, 16}, {}, 0);
  point(3, 4, 5) = 1;
  const BBox b = bbox_xy(point, 8);
  CHECK(b.lo.x == 3);
  CHECK(b.hi.x == 4);
  CHECK(b.lo.y == 4);
  CHECK(b.hi.y == 5);
  CHECK(b.hi.z - b.lo.z == 8);
  CHECK(b.lo.z <= 5);
  CHECK(b.hi.z > 5);

  const Mask full({6, 7, 5}, {}, 1);
  CHECK(bbox_xy(full, 9) == BBox::whole(full.dims()));
  CHECK_THROWS_AS(bbox_xy(Mask({4, 4, 4}, {}, 0), 2), EmptyMaskError);

  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Mask m = oracle::random_mask(gen, {10, 9, 8}, 0.02);
    if (count_foreground(m) == 0) continue;
    int x0 = 99, x1 = -1, y0 = 99, y1 = -1;
    for (int z = 0; z < 8; ++z)
      for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 10; ++x)
          if (m(x, y, z)) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
          }
    const BBox got = bbox_xy(m, 4);
    CHECK(got.lo.x == x0);
    CHECK(got.hi.x == x1 + 1);
    CHECK(got.lo.y == y0);
    CHECK(got.hi.y == y1 + 1);
    CHECK(got.valid_in(m.dims()));
  }
}

TEST_CASE("expand_margin and limit_extent") {
  const Dims host{512, 512, 64};
  const BBox b{{20, 100, 3}, {30, 110, 9}};
  const BBox e = expand_margin(b, 20, host);
  CHECK(e.lo.x == 0);
  CHECK(e.hi.x == 50);
  CHECK(e.lo.y == 80);
  CHECK(e.lo.z == 3);
  CHECK(e.hi.z == 9);
  CHECK(expand_margin(b, 0, host) == b);
  const BBox edge = expand_margin(BBox{{50, 0, 0}, {60, 1, 1}}, 20, {64, 64, 64});
  CHECK(edge.lo.x == 30);
  CHECK(edge.hi.x == 64);

  const BBox wide{{0, 10, 0}, {40, 20, 4}};
  const BBox lim = limit_extent(wide, {32, 32, 32});
  CHECK(lim.size().nx == 32);
  CHECK(lim.lo.x == 4);
  CHECK(lim.lo.y == 10);
  CHECK(limit_extent(lim, {32, 32, 32}) == lim);
}

TEST_CASE("crop, pad and restore") {
  std::mt19937_64 gen(18);
  const Mask g = oracle::random_mask(gen, {7, 6, 5}, 0.5);
  CHECK(crop(g, BBox::whole(g.dims())) == g);
  const Mask one = crop(g, BBox{{2, 3, 4}, {3, 4, 5}});
  CHECK(one.dims() == Dims{1, 1, 1});
  CHECK(one[0] == g(2, 3, 4));
  CHECK_THROWS_AS(crop(g, BBox{{0, 0, 0}, {8, 1, 1}}), ShapeError);

  const auto [canvas, place] = zero_pad_center(Mask({2, 2, 2}, {}, 1), {4, 4, 4});
  CHECK(place.offset == Index3{1, 1, 1});
  CHECK(count_foreground(canvas) == 8);
  const auto [same, p0] = zero_pad_center(g, g.dims());
  CHECK(same == g);
  CHECK(p0.offset == Index3{0, 0, 0});
  CHECK_THROWS_AS(zero_pad_center(g, {6, 6, 6}), ShapeError);

  const BBox box{{2, 1, 1}, {5, 4, 3}};
  const auto [blank, pb] = zero_pad_center(crop(g, box), {8, 8, 8}, box, g.dims());
  CHECK(count_foreground(restore(Mask({8, 8, 8}, {}, 0), pb)) == 0);
  Mask single({8, 8, 8}, {}, 0);
  single(4, 4, 4) = 1;  // offset floor((8 - 3) / 2) = 2 on x/y, floor((8 - 2) / 2) = 3 on z
  const Mask back = restore(single, pb);
  CHECK(count_foreground(back) == 1);
  CHECK(back(2 + 2, 1 + 2, 1 + 1) == 1);
}
