#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "vesselmark/volume.hpp"

namespace vm {

// Straight tube with hemispherical end caps: every point within radius_mm of
// the segment [a, b].
struct TubeSegment {
  PointMm a;
  PointMm b;
  double radius_mm = 1.0;
};

double distance_to_segment(const PointMm& p, const PointMm& a, const PointMm& b);

struct TubeRendering {
  double inside_hu = 300.0;
  double outside_hu = -160.0;
  // Sub-samples per axis used for partial-volume edges; 1 renders a binary
  // image.
  int supersample = 1;
};

// Renders the union of tubes onto the grid.
ScalarVolume render_tubes(const VolumeGeometry& grid, const std::vector<TubeSegment>& tubes,
                          const TubeRendering& style);

// A parent tube (directions[0]) splitting into two thinner branches at a
// common junction point. Branch radii are child_ratio * radius_mm; with
// bulge > 1 the lumen also widens into a ball at the junction.
struct YJunction {
  PointMm junction;
  std::array<Vec3, 3> directions;  // unit vectors
  double radius_mm = 2.1;          // parent
  double child_ratio = 0.79;
  double bulge = 1.0;
  double length_mm = 200.0;

  std::vector<TubeSegment> segments() const;
};

struct YJunctionRanges {
  double min_radius_mm = 1.75;
  double max_radius_mm = 2.45;
  double min_branch_angle_deg = 50.0;   // angle between the two branches
  double max_branch_angle_deg = 110.0;
  // Murray's law for a symmetric split gives 2^(-1/3) ~ 0.79.
  double min_child_ratio = 0.7;
  double max_child_ratio = 0.85;
};

// Random orientation, branch angle and radius around `junction`; pure
// function of the seed.
YJunction random_y_junction(std::uint64_t seed, const PointMm& junction, const YJunctionRanges& ranges = {});

}  // namespace vm
