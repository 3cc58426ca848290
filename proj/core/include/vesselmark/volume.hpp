#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vesselmark/errors.hpp"
#include "vesselmark/vec3.hpp"

namespace vm {

using Dims = std::array<int, 3>;

// Axis-aligned voxel grid placed in world space. Voxel (0,0,0) sits at
// `origin`; x is the fastest-varying axis in memory, z the slowest.
class VolumeGeometry {
public:
  VolumeGeometry() = default;
  VolumeGeometry(Dims dims, Vec3 spacing, PointMm origin);

  const Dims& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const PointMm& origin() const { return origin_; }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(dims_[0]) *
                                             (static_cast<std::size_t>(j) +
                                              static_cast<std::size_t>(dims_[1]) * k);
  }

  PointMm world_of(const VoxelPos& v) const {
    return {origin_.x + v.x * spacing_.x, origin_.y + v.y * spacing_.y,
            origin_.z + v.z * spacing_.z};
  }
  VoxelPos voxel_of(const PointMm& p) const {
    return {(p.x - origin_.x) / spacing_.x, (p.y - origin_.y) / spacing_.y,
            (p.z - origin_.z) / spacing_.z};
  }

  // True when the continuous index lies in [0, dims-1] on every axis.
  bool contains(const VoxelPos& v, double tol = 1e-9) const;
  bool contains(const PointMm& p, double tol = 1e-9) const { return contains(voxel_of(p), tol); }
  bool contains_index(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

  // Physical length covered by voxel centres along each axis.
  Vec3 extent() const {
    return {(dims_[0] - 1) * spacing_.x, (dims_[1] - 1) * spacing_.y, (dims_[2] - 1) * spacing_.z};
  }
  PointMm center() const { return world_of({(dims_[0] - 1) / 2.0, (dims_[1] - 1) / 2.0, (dims_[2] - 1) / 2.0}); }

  // Equal dims, and spacing/origin equal within `tol_mm`.
  bool same_as(const VolumeGeometry& o, double tol_mm = 1e-5) const;

private:
  Dims dims_{1, 1, 1};
  Vec3 spacing_{1.0, 1.0, 1.0};
  PointMm origin_{};
};

template <typename T>
class Volume {
public:
  using value_type = T;

  Volume() = default;
  explicit Volume(VolumeGeometry geometry, T fill = T{})
      : geometry_(std::move(geometry)), values_(geometry_.voxel_count(), fill) {}
  Volume(VolumeGeometry geometry, std::vector<T> values)
      : geometry_(std::move(geometry)), values_(std::move(values)) {
    if (values_.size() != geometry_.voxel_count()) {
      throw Error(ErrorCode::GeometryMismatch,
                  "value count " + std::to_string(values_.size()) + " != voxel count " +
                      std::to_string(geometry_.voxel_count()));
    }
  }

  const VolumeGeometry& geometry() const { return geometry_; }
  const Dims& dims() const { return geometry_.dims(); }
  std::size_t size() const { return values_.size(); }

  const T& at(int i, int j, int k) const { return values_[geometry_.index(i, j, k)]; }
  T& at(int i, int j, int k) { return values_[geometry_.index(i, j, k)]; }

  std::span<const T> values() const { return values_; }
  std::span<T> values() { return values_; }

private:
  VolumeGeometry geometry_;
  std::vector<T> values_;
};

using ScalarVolume = Volume<float>;
using MaskVolume = Volume<std::uint8_t>;
using VectorField = Volume<Vec3>;

struct OrganMask {
  std::string name;
  MaskVolume mask;
  double fill_hu = 0.0;
};

// Masks applied in list order; a later mask overrides an earlier one where
// they overlap.
class OrganMaskSet {
public:
  OrganMaskSet() = default;
  explicit OrganMaskSet(std::vector<OrganMask> masks);

  const std::vector<OrganMask>& masks() const { return masks_; }
  bool empty() const { return masks_.empty(); }

private:
  std::vector<OrganMask> masks_;
};

namespace detail {

template <typename T>
struct Accum {
  double v = 0.0;
  void add(const T& value, double w) { v += static_cast<double>(value) * w; }
  double result() const { return v; }
};

template <>
struct Accum<Vec3> {
  Vec3 v{};
  void add(const Vec3& value, double w) { v += value * w; }
  Vec3 result() const { return v; }
};

// Lower corner index and fractional offset for trilinear weights; an axis of
// size 1 collapses to a single sample.
inline void corner(double pos, int dim, int& lo, double& frac) {
  if (dim == 1) {
    lo = 0;
    frac = 0.0;
    return;
  }
  double f = std::floor(pos);
  lo = static_cast<int>(f);
  if (lo >= dim - 1) lo = dim - 2;
  if (lo < 0) lo = 0;
  frac = pos - lo;
}

}  // namespace detail

// Trilinear interpolation at a continuous voxel index. The caller guarantees
// the index is inside [0, dims-1]; use the checked overloads otherwise.
template <typename T>
auto interpolate_voxel(const Volume<T>& vol, const VoxelPos& v) {
  const Dims& d = vol.dims();
  int i0, j0, k0;
  double fx, fy, fz;
  detail::corner(v.x, d[0], i0, fx);
  detail::corner(v.y, d[1], j0, fy);
  detail::corner(v.z, d[2], k0, fz);
  const int i1 = d[0] > 1 ? i0 + 1 : i0;
  const int j1 = d[1] > 1 ? j0 + 1 : j0;
  const int k1 = d[2] > 1 ? k0 + 1 : k0;
  detail::Accum<T> acc;
  acc.add(vol.at(i0, j0, k0), (1 - fx) * (1 - fy) * (1 - fz));
  acc.add(vol.at(i1, j0, k0), fx * (1 - fy) * (1 - fz));
  acc.add(vol.at(i0, j1, k0), (1 - fx) * fy * (1 - fz));
  acc.add(vol.at(i1, j1, k0), fx * fy * (1 - fz));
  acc.add(vol.at(i0, j0, k1), (1 - fx) * (1 - fy) * fz);
  acc.add(vol.at(i1, j0, k1), fx * (1 - fy) * fz);
  acc.add(vol.at(i0, j1, k1), (1 - fx) * fy * fz);
  acc.add(vol.at(i1, j1, k1), fx * fy * fz);
  return acc.result();
}

// Clamp a continuous index onto the sampling domain (nearest face value).
VoxelPos clamp_to_domain(const VolumeGeometry& g, const VoxelPos& v);

// Checked trilinear sample at a world point; throws OutOfBounds outside the
// sampling domain.
double sample_trilinear(const ScalarVolume& vol, const PointMm& p);
Vec3 sample_trilinear(const VectorField& field, const PointMm& p);

// Trilinear sample that clamps out-of-domain points to the boundary face.
double sample_clamped(const ScalarVolume& vol, const PointMm& p);

// Resample onto an isotropic grid of `target_spacing` mm sharing the input
// origin; output dims are floor(extent / t) + 1 per axis.
ScalarVolume resample_isotropic(const ScalarVolume& vol, double target_spacing);

// Geometry of the cube of side `side_mm` centred on `center`, clipped to the
// volume. Retained voxels keep their world coordinates.
VolumeGeometry subvolume_geometry(const VolumeGeometry& g, const PointMm& center, double side_mm);
ScalarVolume extract_subvolume(const ScalarVolume& vol, const PointMm& center, double side_mm);

// Clamp to [lo, hi] HU and map linearly onto [0, 1].
ScalarVolume threshold_normalize(const ScalarVolume& vol, double lo, double hi);

ScalarVolume overwrite_organ_intensities(const ScalarVolume& vol, const OrganMaskSet& masks);

}  // namespace vm
