#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vesselmark/filters.hpp"
#include "vesselmark/volume.hpp"

namespace vm {

// Iterative sphere growing. A sphere seeded at a rough bifurcation position
// inflates with a constant internal force while image forces from the
// vessel wall push its surface and centre back into the lumen; the centre
// settles where the vessel is widest.
//
//   u(X)    = (1 - I) * grad I / |grad I|        (0 where |grad I| < eps)
//   c[n+1]  = c[n] + lambda1 * mean_W u(X)
//   r[n+1]  = r[n] + f_int + lambda2 * mean_S (X - c[n]) . u(X)
//
// S is the shell of voxels with | |X - c| - r | <= 1/2 and W the subset of S
// where u is non-zero (all of S when u vanishes on the shell). All lengths
// are in voxels of the isotropic working grid.
struct GrowConfig {
  double lambda1 = 0.2;
  double lambda2 = 0.3;
  double f_int = 0.2;           // voxels per iteration
  int iterations = 30;
  double init_radius = 0.5;     // voxels
  double target_spacing = 0.7;  // mm
  double window_lo = -160.0;    // HU
  double window_hi = 240.0;     // HU
  double sigma = 1.0;           // voxels, gradient smoothing
  double subvolume_mm = 100.0;  // cube side extracted around the seed
  double max_radius = 20.0;         // voxels
  double max_center_drift = 15.0;   // mm
  // A run counts as converged when, over the last `settle_window`
  // iterations, the radius stays within `settle_tol` voxels and the centre
  // moves less than `settle_tol` voxels.
  int settle_window = 4;
  double settle_tol = 0.35;

  void validate() const;
};

struct SphereState {
  VoxelPos center;
  double radius = 0.0;
  int iteration = 0;
};

enum class SourceImage { original, vesselness_mask, manual_mask };
enum class GrowOutcome { converged, diverged, capped };

std::string_view to_string(SourceImage s);
std::string_view to_string(GrowOutcome o);

struct GrowTrace {
  std::vector<SphereState> states;
  SourceImage source = SourceImage::original;
  GrowOutcome outcome = GrowOutcome::capped;
  // Working grid the states are expressed in.
  VolumeGeometry grid;
};

struct RefineResult {
  PointMm point;
  GrowTrace trace;
};

inline constexpr double kGradientEpsilon = 1e-6;

// Per-voxel wall force of a [0, 1] image. |u| <= 1 everywhere; u = 0 where
// I = 1 or the gradient vanishes.
VectorField opposing_force_field(const ScalarVolume& image, const VectorField& grad);

// One update of centre and radius. Throws EmptySupport when no voxel of the
// shell lies inside the grid.
SphereState step(const SphereState& state, const VectorField& u, const GrowConfig& cfg);

// Iterates step() from `seed` on a precomputed force field.
GrowTrace grow_sphere(const VectorField& u, const VoxelPos& seed, const GrowConfig& cfg);

// Prepares the [0, 1] working image: sub-volume around the seed, isotropic
// resampling and (optionally) the HU window.
ScalarVolume working_image(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg,
                           bool apply_window);

// Full pipeline on an HU image.
RefineResult refine_bifurcation(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg);

// Runs the grower on an already normalised [0, 1] image (e.g. a vessel mask).
RefineResult refine_on_normalized(const ScalarVolume& normalized, const PointMm& seed, const GrowConfig& cfg,
                                  SourceImage source);

// Original image first; when that run does not converge, reruns on a
// region-grown vesselness mask, then on `manual_mask` if one is supplied.
RefineResult refine_with_fallback(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg,
                                  const VesselnessParams& vp, const RegionGrowParams& rp,
                                  const MaskVolume* manual_mask = nullptr);

enum class PairType { type1, type2 };
std::string_view to_string(PairType t);

// Type 2 when the larger vessel is at least 2.5 times the smaller diameter.
PairType classify_pair_type(double d_large_mm, double d_small_mm);

// Tabular audit export: iteration, centre xyz (mm), radius (mm), source.
std::string format_trace(const GrowTrace& trace, const GrowConfig& cfg);

}  // namespace vm
