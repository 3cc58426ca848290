#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "vesselmark/volume.hpp"

namespace vm {

// Multiscale Hessian tubularity (Frangi-style) parameters. Scales are in mm.
struct VesselnessParams {
  std::vector<double> scales_mm{1.0, 1.5, 2.0, 3.0};
  double alpha = 0.5;  // plate vs. line discrimination
  double beta = 0.5;   // blob suppression
  // Structureness constant. When unset, half of the largest Hessian norm at
  // each scale is used.
  std::optional<double> c;
  bool bright_on_dark = true;

  void validate() const;
};

struct RegionGrowParams {
  double threshold = 0.05;
  int connectivity = 6;  // 6 or 26
  std::size_t max_voxels = 500000;

  void validate() const;
};

struct RegionGrowResult {
  MaskVolume mask;
  std::size_t voxel_count = 0;
  // Set when growth stopped at max_voxels; the mask is then incomplete.
  bool capped = false;
};

// Normalised Gaussian taps for offsets -radius..radius, radius = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma_voxels);

// Separable Gaussian smoothing with edge replication.
ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma_voxels);
VectorField gaussian_smooth(const VectorField& field, double sigma_voxels);

// Central-difference gradient in intensity per voxel (one-sided on the
// border), then each component smoothed with `sigma_voxels`. Units stay per
// voxel because the sphere grower works in voxel coordinates on an isotropic
// grid.
VectorField smoothed_gradient(const ScalarVolume& vol, double sigma_voxels);

// Eigenvalues of a symmetric 3x3 matrix given as (xx, yy, zz, xy, xz, yz),
// ordered by increasing magnitude.
std::array<double, 3> symmetric_eigenvalues(const std::array<double, 6>& m);

// Tubularity response for eigenvalues sorted |l1| <= |l2| <= |l3|.
double frangi_response(const std::array<double, 3>& lambda, double alpha, double beta, double c,
                       bool bright_on_dark);

// Maximum over scales of the tubularity response; values lie in [0, 1].
ScalarVolume frangi_vesselness(const ScalarVolume& vol, const VesselnessParams& params);

// Flood fill from the seed voxel over voxels >= threshold.
RegionGrowResult region_grow_mask(const ScalarVolume& vol, const PointMm& seed,
                                  const RegionGrowParams& params);

}  // namespace vm
