#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "vesselmark/landmarks.hpp"
#include "vesselmark/volume.hpp"

namespace vm {

// Displacement along one axis: amplitude * sin(2 pi * p_w / wavelength + phase),
// where p_w is the pivot-relative coordinate on the next axis (x reads y,
// y reads z, z reads x).
struct SinusoidAxis {
  double amplitude_mm = 0.0;
  double wavelength_mm = 60.0;
  double phase = 0.0;
};

// Applied about `pivot` in the order scale, rotate, sinusoid.
struct SyntheticTransform {
  Vec3 axis{0, 0, 1};
  double angle_deg = 0.0;
  double scale = 1.0;
  std::array<SinusoidAxis, 3> sinusoid{};
  PointMm pivot{};
  std::uint64_t seed = 0;

  // Ranges are checked; the sinusoid is not, so folding fields can be built
  // on purpose.
  void validate() const;
  // Largest slope of the sinusoidal displacement; below 1 the map is
  // injective and invert_point converges.
  double lipschitz() const;
};

struct TransformRanges {
  double max_angle_deg = 50.0;
  double min_scale = 0.9;
  double max_scale = 1.1;
  double min_amplitude_mm = 2.0;
  double max_amplitude_mm = 5.0;
  double min_wavelength_mm = 40.0;
  double max_wavelength_mm = 80.0;
};

SyntheticTransform random_transform(std::uint64_t seed, const PointMm& pivot, const TransformRanges& ranges = {});
SyntheticTransform identity_transform(const PointMm& pivot);

PointMm map_point_forward(const SyntheticTransform& t, const PointMm& p);
// Fixed-point inversion of the sinusoid followed by the exact rigid/scale
// inverse. Throws NoConvergence if the residual is not below `tol_mm` after
// 100 iterations.
PointMm invert_point(const SyntheticTransform& t, const PointMm& q, double tol_mm = 1e-6);

struct PhantomOptions {
  double patch_mm = 200.0;
  double spacing_mm = 0.7;
};

struct PhantomPair {
  ScalarVolume patch1;
  ScalarVolume patch2;
  SyntheticTransform transform;
  PointMm gt_landmark1;
  PointMm gt_landmark2;
};

// patch1: cube around the landmark resampled to isotropic spacing. patch2:
// patch1 warped by backward mapping through the transform (pivoted at the
// landmark), on the same grid.
PhantomPair make_phantom_pair(const ScalarVolume& image, const PointMm& landmark, std::uint64_t seed,
                              const PhantomOptions& opt = {});
PhantomPair make_phantom_pair(const ScalarVolume& image, const PointMm& landmark, const SyntheticTransform& t,
                              const PhantomOptions& opt = {});

// Samples `source` at the inverse-mapped position of every voxel of `grid`.
ScalarVolume warp_backward(const ScalarVolume& source, const SyntheticTransform& t, const VolumeGeometry& grid);

struct ObserverPatches {
  ScalarVolume patch1;
  ScalarVolume patch2;
  std::array<int, 3> shift{};  // voxels of image 2, applied to landmark 2
};

ObserverPatches make_observer_patch_pair(const ScalarVolume& img1, const ScalarVolume& img2, const LandmarkPair& pair,
                                         std::uint64_t seed, double side_mm = 100.0, int max_shift = 3);

// Plain-text manifest with every transform parameter and both ground-truth
// points, printed at round-trip precision.
std::string format_manifest(const PhantomPair& pair);
SyntheticTransform parse_manifest_transform(const std::string& text);

}  // namespace vm
