#pragma once

// Shared synthetic fixtures and oracles for the unit and acceptance tests.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <unistd.h>

#include "vesselmark/landmarks.hpp"
#include "vesselmark/rng.hpp"
#include "vesselmark/synthetic.hpp"
#include "vesselmark/volume.hpp"

namespace vmtest {

using namespace vm;
namespace fs = std::filesystem;

// Scratch directory removed on scope exit.
class TempDir {
public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("vesselmark_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

private:
  fs::path path_;
};

inline VolumeGeometry cube_grid(int n, double spacing = 0.7, PointMm origin = {}) {
  return VolumeGeometry({n, n, n}, {spacing, spacing, spacing}, origin);
}

// Binary cylinder along z through the grid centre, radius in voxels.
inline ScalarVolume binary_cylinder(const VolumeGeometry& g, double radius_vox, double inside = 240.0,
                                    double outside = -160.0) {
  const PointMm c = g.center();
  const double r = radius_vox * g.spacing().x;
  return render_tubes(g, {{{c.x, c.y, c.z - 1000.0}, {c.x, c.y, c.z + 1000.0}, r}}, {inside, outside, 1});
}

// Exact squared Euclidean distance transform (Felzenszwalb-Huttenlocher),
// in voxel units, of the distance from each voxel to the nearest voxel
// where `feature` is true. Isotropic grids only.
inline std::vector<double> squared_edt(const Dims& d, const std::vector<char>& feature) {
  const double inf = 1e20;
  const std::size_t n = static_cast<std::size_t>(d[0]) * d[1] * d[2];
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = feature[i] ? 0.0 : inf;
  auto pass = [&](int len, auto idx, int lines, auto line_base) {
    std::vector<double> src(len), out(len), z(len + 1);
    std::vector<int> v(len);
    for (int l = 0; l < lines; ++l) {
      const std::size_t base = line_base(l);
      for (int q = 0; q < len; ++q) src[q] = f[idx(base, q)];
      int k = 0;
      v[0] = 0;
      z[0] = -inf;
      z[1] = inf;
      for (int q = 1; q < len; ++q) {
        double s;
        while (true) {
          s = ((src[q] + q * q) - (src[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
          if (s > z[k]) break;
          --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
      }
      k = 0;
      for (int q = 0; q < len; ++q) {
        while (z[k + 1] < q) ++k;
        out[q] = (q - v[k]) * (q - v[k]) + src[v[k]];
      }
      for (int q = 0; q < len; ++q) f[idx(base, q)] = out[q];
    }
  };
  const std::size_t sx = 1, sy = d[0], sz = static_cast<std::size_t>(d[0]) * d[1];
  pass(d[0], [&](std::size_t b, int q) { return b + q * sx; }, d[1] * d[2],
       [&](int l) { return static_cast<std::size_t>(l % d[1]) * sy + static_cast<std::size_t>(l / d[1]) * sz; });
  pass(d[1], [&](std::size_t b, int q) { return b + q * sy; }, d[0] * d[2],
       [&](int l) { return static_cast<std::size_t>(l % d[0]) + static_cast<std::size_t>(l / d[0]) * sz; });
  pass(d[2], [&](std::size_t b, int q) { return b + q * sz; }, d[0] * d[1],
       [&](int l) { return static_cast<std::size_t>(l); });
  return f;
}

// Distance in mm from a world point to the nearest background voxel centre
// of a binary lumen image (value > 0.5 is lumen), by exhaustive search.
inline double brute_force_interior_distance(const ScalarVolume& lumen, const PointMm& p) {
  const auto& g = lumen.geometry();
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.dims()[2]; ++k)
    for (int j = 0; j < g.dims()[1]; ++j)
      for (int i = 0; i < g.dims()[0]; ++i)
        if (lumen.at(i, j, k) <= 0.5)
          best = std::min(best, distance(p, g.world_of({double(i), double(j), double(k)})));
  return best;
}

// Largest distance-transform value over the lumen, in mm.
inline double max_interior_distance(const ScalarVolume& lumen) {
  const auto& g = lumen.geometry();
  std::vector<char> bg(lumen.size());
  for (std::size_t n = 0; n < lumen.size(); ++n) bg[n] = lumen.values()[n] <= 0.5;
  const auto d2 = squared_edt(g.dims(), bg);
  double mx = 0.0;
  for (double v : d2) mx = std::max(mx, v);
  return std::sqrt(mx) * g.spacing().x;
}

// Y junction centred (within half a voxel) on the grid centre.
struct YFixture {
  YJunction y;
  ScalarVolume image;  // HU
  ScalarVolume lumen;  // binary, 1 inside
  PointMm seed;        // two voxels from the junction in a random direction
};

inline YFixture make_y_fixture(std::uint64_t seed, int n = 57, double spacing = 0.7) {
  const VolumeGeometry g = cube_grid(n, spacing);
  Rng rng(mix_seed(seed, 1));
  const double h = 0.5 * spacing;
  const PointMm j = translate(g.center(), Vec3{rng.uniform(-h, h), rng.uniform(-h, h), rng.uniform(-h, h)});
  YFixture f;
  f.y = random_y_junction(mix_seed(seed, 2), j);
  const auto segs = f.y.segments();
  f.image = render_tubes(g, segs, {});
  f.lumen = render_tubes(g, segs, {1.0, 0.0, 1});
  f.seed = translate(j, rng.unit_vector() * (2.0 * spacing));
  return f;
}

// Binary lumen of the Y on a fine grid around the junction. The image grid
// is too coarse for a distance oracle at these radii: its values jump by a
// sizeable fraction of the radius between neighbouring voxels.
inline ScalarVolume fine_lumen(const YJunction& y, double spacing = 0.14, int n = 101) {
  const double h = 0.5 * (n - 1) * spacing;
  const VolumeGeometry g = cube_grid(n, spacing, translate(y.junction, Vec3{-h, -h, -h}));
  return render_tubes(g, y.segments(), {1.0, 0.0, 1});
}

// A Y junction merged into a much wider parallel vessel (the tubes overlap by
// `overlap_mm`); on the raw image the sphere leaks into the wide lumen
// instead of settling.
struct OverlapFixture {
  YJunction y;
  ScalarVolume image;
  PointMm seed;
};

inline OverlapFixture make_overlap_fixture(std::uint64_t k = 9, double overlap_mm = 3.5) {
  const VolumeGeometry g = cube_grid(121);
  const PointMm j = g.center();
  OverlapFixture f;
  f.y = random_y_junction(mix_seed(11, k), j);
  Vec3 n = cross(f.y.directions[1], f.y.directions[2]);
  n = n * (1.0 / norm(n));
  const double big = 16.0;
  const PointMm bc = translate(j, n * (f.y.radius_mm - overlap_mm + big));
  auto tubes = f.y.segments();
  tubes.push_back({translate(bc, f.y.directions[0] * -200.0), translate(bc, f.y.directions[0] * 200.0), big});
  f.image = render_tubes(g, tubes, {300.0, -160.0, 3});
  f.seed = translate(j, Rng(mix_seed(7, k)).unit_vector() * (2.0 * 0.7));
  return f;
}

// Several well separated Y junctions in one volume; the junction points
// double as ground truth. Image 2 is image 1 shifted by `shift` mm.
struct MultiYCase {
  ScalarVolume image1;
  ScalarVolume image2;
  std::vector<PointMm> junctions;
  Vec3 shift;
};

inline MultiYCase make_multi_y_case(int count, std::uint64_t seed, Vec3 shift = {1.4, -0.7, 0.7}) {
  const double spacing = 0.7, pitch = 28.0;
  const int cols = (count + 1) / 2;
  const Dims dims{static_cast<int>(cols * pitch / spacing) + 1, static_cast<int>(2 * pitch / spacing) + 1,
                  static_cast<int>(pitch / spacing) + 1};
  const VolumeGeometry g(dims, {spacing, spacing, spacing}, {0, 0, 0});
  std::vector<TubeSegment> tubes1, tubes2;
  MultiYCase c;
  c.shift = shift;
  for (int n = 0; n < count; ++n) {
    const PointMm j{(n / 2 + 0.5) * pitch, (n % 2 + 0.5) * pitch, 0.5 * pitch};
    YJunction y = random_y_junction(mix_seed(seed, n), j);
    y.length_mm = 9.0;
    for (const auto& s : y.segments()) {
      tubes1.push_back(s);
      tubes2.push_back({translate(s.a, shift), translate(s.b, shift), s.radius_mm});
    }
    c.junctions.push_back(j);
  }
  c.image1 = render_tubes(g, tubes1, {});
  c.image2 = render_tubes(g, tubes2, {});
  return c;
}

inline std::vector<LandmarkPair> seeds_near(const MultiYCase& c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<LandmarkPair> out;
  for (std::size_t n = 0; n < c.junctions.size(); ++n) {
    LandmarkPair p;
    p.id = static_cast<int>(n) + 1;
    p.p1 = translate(c.junctions[n], rng.unit_vector() * 1.0);
    p.p2 = translate(translate(c.junctions[n], c.shift), rng.unit_vector() * 1.0);
    out.push_back(p);
  }
  return out;
}

}  // namespace vmtest
