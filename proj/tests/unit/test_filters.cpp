#include <deque>

#include "doctest.h"
#include "support/check_code.hpp"
#include "support/fixtures.hpp"
#include "vesselmark/filters.hpp"

using namespace vmtest;

TEST_CASE("gaussian kernel and smoothing") {
  const auto k = gaussian_kernel(1.0);
  REQUIRE(k.size() == 7);
  double sum = 0;
  for (double w : k) sum += w;
  CHECK(sum == doctest::Approx(1.0));
  CHECK(gaussian_kernel(0.4).size() == 5);  // radius ceil(1.2) = 2
  CHECK_CODE(gaussian_kernel(0.0), InvalidSigma);

  const VolumeGeometry g({15, 15, 15}, {1, 1, 1}, {});
  SUBCASE("constant preserved") {
    const ScalarVolume s = gaussian_smooth(ScalarVolume(g, 3.5f), 2.0);
    for (float v : s.values()) CHECK(v == doctest::Approx(3.5).epsilon(1e-6));
  }
  SUBCASE("impulse centre weight") {
    ScalarVolume imp(g, 0.0f);
    imp.at(7, 7, 7) = 1.0f;
    const ScalarVolume s = gaussian_smooth(imp, 1.0);
    CHECK(s.at(7, 7, 7) == doctest::Approx(k[3] * k[3] * k[3]).epsilon(1e-4));
    double total = 0;
    for (float v : s.values()) total += v;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    // Peak falls as sigma grows.
    CHECK(gaussian_smooth(imp, 1.5).at(7, 7, 7) < s.at(7, 7, 7));
  }
  SUBCASE("invalid sigma") { CHECK_CODE(gaussian_smooth(ScalarVolume(g), -1.0), InvalidSigma); }
}

TEST_CASE("smoothed gradient") {
  SUBCASE("constant gives zero") {
    const VectorField gr = smoothed_gradient(ScalarVolume(VolumeGeometry({8, 8, 8}, {1, 1, 1}, {}), 5.0f), 1.0);
    for (const auto& v : gr.values()) CHECK(norm(v) == 0.0);
  }
  SUBCASE("ramp along z") {
    const VolumeGeometry g({12, 12, 12}, {0.7, 0.7, 0.7}, {});
    ScalarVolume ramp(g);
    for (int k = 0; k < 12; ++k)
      for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) ramp.at(i, j, k) = static_cast<float>(k);
    const VectorField gr = smoothed_gradient(ramp, 1.0);
    for (int k = 4; k < 8; ++k) {
      CHECK(gr.at(6, 6, k).z == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(std::abs(gr.at(6, 6, k).x) < 1e-6);
    }
  }
  SUBCASE("matches finite differences of the smoothed volume") {
    const VolumeGeometry g({24, 24, 24}, {1, 1, 1}, {});
    ScalarVolume v(g);
    Rng rng(3);
    for (auto& x : v.values()) x = static_cast<float>(rng.uniform());
    const ScalarVolume s = gaussian_smooth(v, 1.5);
    const VectorField gr = smoothed_gradient(v, 1.5);
    for (int n = 0; n < 100; ++n) {
      const int i = static_cast<int>(rng.uniform_int(6, 17)), j = static_cast<int>(rng.uniform_int(6, 17)),
                k = static_cast<int>(rng.uniform_int(6, 17));
      const Vec3 fd{(s.at(i + 1, j, k) - s.at(i - 1, j, k)) / 2.0, (s.at(i, j + 1, k) - s.at(i, j - 1, k)) / 2.0,
                    (s.at(i, j, k + 1) - s.at(i, j, k - 1)) / 2.0};
      CHECK(norm(gr.at(i, j, k) - fd) < 1e-5);
    }
  }
  SUBCASE("too small") {
    CHECK_CODE(smoothed_gradient(ScalarVolume(VolumeGeometry({2, 5, 5}, {1, 1, 1}, {})), 1.0), VolumeTooSmall);
  }
}

TEST_CASE("symmetric eigenvalues sorted by magnitude") {
  const auto e = symmetric_eigenvalues({2, -5, 1, 0, 0, 0});
  CHECK(e[0] == doctest::Approx(1));
  CHECK(e[1] == doctest::Approx(2));
  CHECK(e[2] == doctest::Approx(-5));
  // Rotated diag(1, 2, 3) about z by 45 degrees.
  const auto r = symmetric_eigenvalues({1.5, 1.5, 3, 0.5, 0, 0});
  CHECK(r[0] == doctest::Approx(1));
  CHECK(r[1] == doctest::Approx(2));
  CHECK(r[2] == doctest::Approx(3));
}

TEST_CASE("frangi vesselness") {
  const VolumeGeometry g = cube_grid(41, 1.0);
  const PointMm c = g.center();
  VesselnessParams p;
  p.scales_mm = {1, 2, 3};
  SUBCASE("constant volume") {
    const ScalarVolume v = frangi_vesselness(ScalarVolume(g, 0.5f), p);
    for (float x : v.values()) CHECK(x == 0.0f);
  }
  SUBCASE("cylinder against background and blob") {
    const ScalarVolume cyl = render_tubes(g, {{{c.x, c.y, -100}, {c.x, c.y, 100}, 2.0}}, {1.0, 0.0, 2});
    const ScalarVolume ves = frangi_vesselness(cyl, p);
    const double axis = ves.at(20, 20, 20), bg = ves.at(5, 5, 20);
    CHECK(axis >= 10.0 * bg);
    for (float x : ves.values()) CHECK((x >= 0.0f && x <= 1.0f));

    const ScalarVolume ball = render_tubes(g, {{c, c, 2.0}}, {1.0, 0.0, 2});
    CHECK(frangi_vesselness(ball, p).at(20, 20, 20) < axis);

    ScalarVolume shifted = cyl;
    for (auto& x : shifted.values()) x += 0.25f;
    const ScalarVolume ves2 = frangi_vesselness(shifted, p);
    double worst = 0;
    for (std::size_t n = 0; n < ves.size(); ++n) worst = std::max(worst, double(std::abs(ves2.values()[n] - ves.values()[n])));
    CHECK(worst < 1e-6);
  }
  SUBCASE("parameter validation") {
    VesselnessParams bad = p;
    bad.scales_mm = {2, 1};
    CHECK_CODE(frangi_vesselness(ScalarVolume(g), bad), InvalidParams);
    bad = p;
    bad.alpha = 0;
    CHECK_CODE(bad.validate(), InvalidParams);
  }
}

namespace {

// Plain breadth-first flood over voxels >= t with 6- or 26-connectivity.
std::vector<char> reference_flood(const ScalarVolume& v, int si, int sj, int sk, double t, int conn) {
  const auto& d = v.dims();
  std::vector<char> seen(v.size(), 0);
  std::deque<std::array<int, 3>> q{{si, sj, sk}};
  seen[v.geometry().index(si, sj, sk)] = 1;
  while (!q.empty()) {
    const auto [i, j, k] = q.front();
    q.pop_front();
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int m = std::abs(dx) + std::abs(dy) + std::abs(dz);
          if (m == 0 || (conn == 6 && m != 1)) continue;
          const int a = i + dx, b = j + dy, c = k + dz;
          if (a < 0 || b < 0 || c < 0 || a >= d[0] || b >= d[1] || c >= d[2]) continue;
          const std::size_t id = v.geometry().index(a, b, c);
          if (seen[id] || v.at(a, b, c) < t) continue;
          seen[id] = 1;
          q.push_back({a, b, c});
        }
  }
  return seen;
}

}  // namespace

TEST_CASE("region growing") {
  const VolumeGeometry g = cube_grid(30, 1.0);
  SUBCASE("total flood") {
    const auto r = region_grow_mask(ScalarVolume(g, 1.0f), g.center(), RegionGrowParams{});
    CHECK(r.voxel_count == g.voxel_count());
    CHECK_FALSE(r.capped);
  }
  SUBCASE("cylinder component, with a disconnected blob") {
    const PointMm c = g.center();
    const ScalarVolume img = render_tubes(
        g, {{{c.x, c.y, -5}, {c.x, c.y, 50}, 3.0}, {{c.x + 9, c.y + 9, c.z}, {c.x + 9, c.y + 9, c.z}, 2.0}}, {1, 0, 1});
    for (int conn : {6, 26}) {
      RegionGrowParams rp;
      rp.threshold = 0.5;
      rp.connectivity = conn;
      const auto r = region_grow_mask(img, c, rp);
      const auto ref = reference_flood(img, 15, 15, 15, 0.5, conn);
      std::size_t diff = 0;
      for (std::size_t n = 0; n < ref.size(); ++n) diff += (r.mask.values()[n] != 0) != (ref[n] != 0);
      CHECK(diff == 0);
      CHECK(r.mask.at(24, 24, 15) == 0);
    }
  }
  SUBCASE("cap") {
    RegionGrowParams rp;
    rp.max_voxels = 100;
    const auto r = region_grow_mask(ScalarVolume(g, 1.0f), g.center(), rp);
    CHECK(r.capped);
    CHECK(r.voxel_count == 100);
  }
  SUBCASE("seed below threshold") {
    RegionGrowParams rp;
    rp.threshold = 0.5;
    CHECK_CODE(region_grow_mask(ScalarVolume(g, 0.0f), g.center(), rp), SeedBelowThreshold);
    rp.connectivity = 18;
    CHECK_CODE(rp.validate(), InvalidParams);
  }
}
