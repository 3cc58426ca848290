#include "vesselmark/volume.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vesselmark/parallel.hpp"

namespace vm {

namespace {

std::string describe(const PointMm& p) {
  std::ostringstream os;
  os << p;
  return os.str();
}

}  // namespace

VolumeGeometry::VolumeGeometry(Dims dims, Vec3 spacing, PointMm origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
  for (int a = 0; a < 3; ++a) {
    if (dims_[a] < 1) throw Error(ErrorCode::InvalidParams, "volume dims must be >= 1");
    if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
      throw Error(ErrorCode::InvalidParams, "voxel spacing must be positive and finite");
  }
  if (!is_finite(origin_)) throw Error(ErrorCode::InvalidParams, "volume origin must be finite");
}

bool VolumeGeometry::contains(const VoxelPos& v, double tol) const {
  for (int a = 0; a < 3; ++a) {
    if (!(v[a] >= -tol && v[a] <= dims_[a] - 1 + tol)) return false;
  }
  return true;
}

bool VolumeGeometry::same_as(const VolumeGeometry& o, double tol_mm) const {
  if (dims_ != o.dims_) return false;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(spacing_[a] - o.spacing_[a]) > tol_mm) return false;
    if (std::abs(origin_[a] - o.origin_[a]) > tol_mm) return false;
  }
  return true;
}

OrganMaskSet::OrganMaskSet(std::vector<OrganMask> masks) : masks_(std::move(masks)) {
  for (const auto& m : masks_) {
    if (!std::isfinite(m.fill_hu))
      throw Error(ErrorCode::InvalidParams, "organ '" + m.name + "' has a non-finite fill value");
    if (!m.mask.geometry().same_as(masks_.front().mask.geometry()))
      throw Error(ErrorCode::GeometryMismatch, "organ masks do not share one geometry");
  }
}

VoxelPos clamp_to_domain(const VolumeGeometry& g, const VoxelPos& v) {
  const Dims& d = g.dims();
  return {std::clamp(v.x, 0.0, static_cast<double>(d[0] - 1)),
          std::clamp(v.y, 0.0, static_cast<double>(d[1] - 1)),
          std::clamp(v.z, 0.0, static_cast<double>(d[2] - 1))};
}

double sample_trilinear(const ScalarVolume& vol, const PointMm& p) {
  const VoxelPos v = vol.geometry().voxel_of(p);
  if (!vol.geometry().contains(v)) throw Error(ErrorCode::OutOfBounds, "point " + describe(p) + " outside volume");
  return interpolate_voxel(vol, clamp_to_domain(vol.geometry(), v));
}

Vec3 sample_trilinear(const VectorField& field, const PointMm& p) {
  const VoxelPos v = field.geometry().voxel_of(p);
  if (!field.geometry().contains(v))
    throw Error(ErrorCode::OutOfBounds, "point " + describe(p) + " outside vector field");
  return interpolate_voxel(field, clamp_to_domain(field.geometry(), v));
}

double sample_clamped(const ScalarVolume& vol, const PointMm& p) {
  return interpolate_voxel(vol, clamp_to_domain(vol.geometry(), vol.geometry().voxel_of(p)));
}

ScalarVolume resample_isotropic(const ScalarVolume& vol, double target_spacing) {
  if (!(target_spacing > 0.0)) throw Error(ErrorCode::InvalidParams, "target spacing must be positive");
  const VolumeGeometry& in = vol.geometry();
  const Vec3 extent = in.extent();
  Dims dims{};
  for (int a = 0; a < 3; ++a) {
    // The small slack keeps exact multiples (e.g. an already isotropic grid)
    // from losing their last voxel to rounding.
    dims[a] = static_cast<int>(std::floor(extent[a] / target_spacing + 1e-9)) + 1;
  }
  VolumeGeometry out_geom(dims, {target_spacing, target_spacing, target_spacing}, in.origin());
  ScalarVolume out(out_geom);
  parallel_for(0, dims[2], [&](int k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const PointMm w = out_geom.world_of({double(i), double(j), double(k)});
        const VoxelPos v = clamp_to_domain(in, in.voxel_of(w));
        out.at(i, j, k) = static_cast<float>(interpolate_voxel(vol, v));
      }
    }
  });
  return out;
}

VolumeGeometry subvolume_geometry(const VolumeGeometry& g, const PointMm& center, double side_mm) {
  if (!(side_mm > 0.0)) throw Error(ErrorCode::InvalidParams, "sub-volume side must be positive");
  if (!g.contains(center)) throw Error(ErrorCode::OutOfBounds, "sub-volume centre " + describe(center) + " outside volume");
  const VoxelPos lo = g.voxel_of({center.x - side_mm / 2, center.y - side_mm / 2, center.z - side_mm / 2});
  const VoxelPos hi = g.voxel_of({center.x + side_mm / 2, center.y + side_mm / 2, center.z + side_mm / 2});
  Dims dims{};
  VoxelPos first{};
  for (int a = 0; a < 3; ++a) {
    int i0 = static_cast<int>(std::ceil(lo[a] - 1e-9));
    int i1 = static_cast<int>(std::floor(hi[a] + 1e-9));
    i0 = std::clamp(i0, 0, g.dims()[a] - 1);
    i1 = std::clamp(i1, 0, g.dims()[a] - 1);
    // A side smaller than one voxel still keeps the voxel nearest the centre.
    if (i1 < i0) i0 = i1 = std::clamp(static_cast<int>(std::lround(g.voxel_of(center)[a])), 0, g.dims()[a] - 1);
    dims[a] = i1 - i0 + 1;
    first[a] = i0;
  }
  return VolumeGeometry(dims, g.spacing(), g.world_of(first));
}

ScalarVolume extract_subvolume(const ScalarVolume& vol, const PointMm& center, double side_mm) {
  const VolumeGeometry sub = subvolume_geometry(vol.geometry(), center, side_mm);
  const VoxelPos first = vol.geometry().voxel_of(sub.origin());
  const int i0 = static_cast<int>(std::lround(first.x));
  const int j0 = static_cast<int>(std::lround(first.y));
  const int k0 = static_cast<int>(std::lround(first.z));
  ScalarVolume out(sub);
  const Dims& d = sub.dims();
  for (int k = 0; k < d[2]; ++k)
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) out.at(i, j, k) = vol.at(i0 + i, j0 + j, k0 + k);
  return out;
}

ScalarVolume threshold_normalize(const ScalarVolume& vol, double lo, double hi) {
  if (!(lo < hi)) throw Error(ErrorCode::InvalidWindow, "window lower bound must be below upper bound");
  ScalarVolume out(vol.geometry());
  auto src = vol.values();
  auto dst = out.values();
  const double width = hi - lo;
  for (std::size_t n = 0; n < src.size(); ++n) {
    const double v = std::clamp(static_cast<double>(src[n]), lo, hi);
    dst[n] = static_cast<float>((v - lo) / width);
  }
  return out;
}

ScalarVolume overwrite_organ_intensities(const ScalarVolume& vol, const OrganMaskSet& masks) {
  ScalarVolume out = vol;
  for (const auto& organ : masks.masks()) {
    if (!organ.mask.geometry().same_as(vol.geometry()))
      throw Error(ErrorCode::GeometryMismatch, "mask '" + organ.name + "' geometry differs from the image");
    auto m = organ.mask.values();
    auto dst = out.values();
    const float fill = static_cast<float>(organ.fill_hu);
    for (std::size_t n = 0; n < m.size(); ++n)
      if (m[n]) dst[n] = fill;
  }
  return out;
}

}  // namespace vm
