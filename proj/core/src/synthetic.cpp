#include "vesselmark/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vesselmark/parallel.hpp"
#include "vesselmark/rng.hpp"

namespace vm {

double distance_to_segment(const PointMm& p, const PointMm& a, const PointMm& b) {
  const Vec3 ab = offset(a, b);
  const Vec3 ap = offset(a, p);
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(ap, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(ap - ab * t);
}

namespace {

// Signed clearance of p: positive inside the tube union.
double clearance(const PointMm& p, const std::vector<TubeSegment>& tubes) {
  double best = -1e300;
  for (const auto& t : tubes) best = std::max(best, t.radius_mm - distance_to_segment(p, t.a, t.b));
  return best;
}

}  // namespace

ScalarVolume render_tubes(const VolumeGeometry& grid, const std::vector<TubeSegment>& tubes,
                          const TubeRendering& style) {
  const int ss = std::max(1, style.supersample);
  ScalarVolume out(grid, static_cast<float>(style.outside_hu));
  if (tubes.empty()) return out;
  const Dims& d = grid.dims();
  const Vec3& h = grid.spacing();
  const double half_diag = 0.5 * norm(h);
  parallel_for(0, d[2], [&](int k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        const PointMm c = grid.world_of({double(i), double(j), double(k)});
        const double cl = clearance(c, tubes);
        double frac;
        if (ss == 1) {
          frac = cl >= 0.0 ? 1.0 : 0.0;
        } else if (cl >= half_diag) {
          frac = 1.0;
        } else if (cl <= -half_diag) {
          frac = 0.0;
        } else {
          int hits = 0;
          for (int sz = 0; sz < ss; ++sz)
            for (int sy = 0; sy < ss; ++sy)
              for (int sx = 0; sx < ss; ++sx) {
                const VoxelPos v{i + (sx + 0.5) / ss - 0.5, j + (sy + 0.5) / ss - 0.5, k + (sz + 0.5) / ss - 0.5};
                if (clearance(grid.world_of(v), tubes) >= 0.0) ++hits;
              }
          frac = static_cast<double>(hits) / (ss * ss * ss);
        }
        out.at(i, j, k) = static_cast<float>(style.outside_hu + frac * (style.inside_hu - style.outside_hu));
      }
    }
  });
  return out;
}

std::vector<TubeSegment> YJunction::segments() const {
  std::vector<TubeSegment> out;
  for (std::size_t n = 0; n < directions.size(); ++n) {
    const double r = n == 0 ? radius_mm : radius_mm * child_ratio;
    out.push_back({junction, translate(junction, directions[n] * length_mm), r});
  }
  if (bulge > 1.0) out.push_back({junction, junction, radius_mm * bulge});
  return out;
}

namespace {

// Rotation matrix rows from a uniformly distributed unit quaternion
// (Shoemake's subgroup algorithm).
std::array<Vec3, 3> random_rotation(Rng& rng) {
  const double u1 = rng.uniform(), u2 = rng.uniform(), u3 = rng.uniform();
  const double tau = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1 - u1) * std::sin(tau * u2);
  const double b = std::sqrt(1 - u1) * std::cos(tau * u2);
  const double c = std::sqrt(u1) * std::sin(tau * u3);
  const double w = std::sqrt(u1) * std::cos(tau * u3);
  return {Vec3{1 - 2 * (b * b + c * c), 2 * (a * b - c * w), 2 * (a * c + b * w)},
          Vec3{2 * (a * b + c * w), 1 - 2 * (a * a + c * c), 2 * (b * c - a * w)},
          Vec3{2 * (a * c - b * w), 2 * (b * c + a * w), 1 - 2 * (a * a + b * b)}};
}

Vec3 apply(const std::array<Vec3, 3>& rows, const Vec3& v) {
  return {dot(rows[0], v), dot(rows[1], v), dot(rows[2], v)};
}

}  // namespace

YJunction random_y_junction(std::uint64_t seed, const PointMm& junction, const YJunctionRanges& ranges) {
  Rng rng(seed);
  const double half = 0.5 * rng.uniform(ranges.min_branch_angle_deg, ranges.max_branch_angle_deg) *
                      std::numbers::pi / 180.0;
  const double radius = rng.uniform(ranges.min_radius_mm, ranges.max_radius_mm);
  const double ratio = rng.uniform(ranges.min_child_ratio, ranges.max_child_ratio);
  const auto rot = random_rotation(rng);
  YJunction y;
  y.junction = junction;
  y.radius_mm = radius;
  y.child_ratio = ratio;
  y.directions = {apply(rot, {0, 0, -1}), apply(rot, {std::sin(half), 0, std::cos(half)}),
                  apply(rot, {-std::sin(half), 0, std::cos(half)})};
  return y;
}

}  // namespace vm
