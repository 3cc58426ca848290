#include "vesselmark/filters.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>

#include "vesselmark/parallel.hpp"

namespace vm {

void VesselnessParams::validate() const {
  if (scales_mm.empty()) throw Error(ErrorCode::InvalidParams, "vesselness needs at least one scale");
  for (std::size_t n = 0; n < scales_mm.size(); ++n) {
    if (!(scales_mm[n] > 0.0)) throw Error(ErrorCode::InvalidParams, "vesselness scales must be positive");
    if (n > 0 && !(scales_mm[n] > scales_mm[n - 1]))
      throw Error(ErrorCode::InvalidParams, "vesselness scales must be strictly increasing");
  }
  if (!(alpha > 0.0) || !(beta > 0.0)) throw Error(ErrorCode::InvalidParams, "alpha and beta must be positive");
  if (c && !(*c > 0.0)) throw Error(ErrorCode::InvalidParams, "structureness constant must be positive");
}

void RegionGrowParams::validate() const {
  if (connectivity != 6 && connectivity != 26)
    throw Error(ErrorCode::InvalidParams, "connectivity must be 6 or 26");
  if (max_voxels == 0) throw Error(ErrorCode::InvalidParams, "max_voxels must be positive");
}

std::vector<double> gaussian_kernel(double sigma_voxels) {
  if (!(sigma_voxels > 0.0) || !std::isfinite(sigma_voxels))
    throw Error(ErrorCode::InvalidSigma, "sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_voxels));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-0.5 * t * t / (sigma_voxels * sigma_voxels));
    sum += k[t + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

namespace {

// In-place separable convolution of a dense x-fastest buffer along one axis,
// replicating the edge samples.
template <typename T>
void convolve_axis(std::vector<T>& data, const Dims& d, int axis, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const int len = d[axis];
  const std::size_t stride = axis == 0 ? 1 : (axis == 1 ? std::size_t(d[0]) : std::size_t(d[0]) * d[1]);
  // Lines are enumerated by the two remaining axes.
  const int a1 = axis == 0 ? 1 : 0;
  const int a2 = axis == 2 ? 1 : 2;
  const std::size_t s1 = a1 == 0 ? 1 : std::size_t(d[0]);
  const std::size_t s2 = a2 == 1 ? std::size_t(d[0]) : std::size_t(d[0]) * d[1];
  parallel_for(0, d[a2], [&](int q) {
    std::vector<T> line(len);
    for (int p = 0; p < d[a1]; ++p) {
      const std::size_t base = p * s1 + q * s2;
      for (int t = 0; t < len; ++t) line[t] = data[base + t * stride];
      for (int t = 0; t < len; ++t) {
        T acc{};
        for (int o = -radius; o <= radius; ++o) {
          const int src = std::clamp(t + o, 0, len - 1);
          acc += line[src] * kernel[o + radius];
        }
        data[base + t * stride] = acc;
      }
    }
  });
}

template <typename T>
void smooth_buffer(std::vector<T>& data, const Dims& d, const std::array<double, 3>& sigma) {
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 1) continue;
    convolve_axis(data, d, a, gaussian_kernel(sigma[a]));
  }
}

std::vector<double> to_double(const ScalarVolume& vol) {
  auto v = vol.values();
  return std::vector<double>(v.begin(), v.end());
}

ScalarVolume from_double(const VolumeGeometry& g, const std::vector<double>& data) {
  ScalarVolume out(g);
  auto dst = out.values();
  for (std::size_t n = 0; n < data.size(); ++n) dst[n] = static_cast<float>(data[n]);
  return out;
}

}  // namespace

ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma_voxels) {
  gaussian_kernel(sigma_voxels);  // validates sigma even for degenerate volumes
  std::vector<double> data = to_double(vol);
  smooth_buffer(data, vol.dims(), {sigma_voxels, sigma_voxels, sigma_voxels});
  return from_double(vol.geometry(), data);
}

VectorField gaussian_smooth(const VectorField& field, double sigma_voxels) {
  gaussian_kernel(sigma_voxels);
  auto src = field.values();
  std::vector<Vec3> data(src.begin(), src.end());
  smooth_buffer(data, field.dims(), {sigma_voxels, sigma_voxels, sigma_voxels});
  return VectorField(field.geometry(), std::move(data));
}

VectorField smoothed_gradient(const ScalarVolume& vol, double sigma_voxels) {
  const Dims& d = vol.dims();
  if (d[0] < 3 || d[1] < 3 || d[2] < 3)
    throw Error(ErrorCode::VolumeTooSmall, "gradient needs at least 3 voxels per axis");
  gaussian_kernel(sigma_voxels);
  VectorField grad(vol.geometry());
  auto diff = [](double lo, double hi, int steps) { return (hi - lo) / steps; };
  parallel_for(0, d[2], [&](int k) {
    for (int j = 0; j < d[1]; ++j) {
      for (int i = 0; i < d[0]; ++i) {
        Vec3 g;
        const int i0 = std::max(i - 1, 0), i1 = std::min(i + 1, d[0] - 1);
        const int j0 = std::max(j - 1, 0), j1 = std::min(j + 1, d[1] - 1);
        const int k0 = std::max(k - 1, 0), k1 = std::min(k + 1, d[2] - 1);
        g.x = diff(vol.at(i0, j, k), vol.at(i1, j, k), i1 - i0);
        g.y = diff(vol.at(i, j0, k), vol.at(i, j1, k), j1 - j0);
        g.z = diff(vol.at(i, j, k0), vol.at(i, j, k1), k1 - k0);
        grad.at(i, j, k) = g;
      }
    }
  });
  return gaussian_smooth(grad, sigma_voxels);
}

std::array<double, 3> symmetric_eigenvalues(const std::array<double, 6>& m) {
  const double a11 = m[0], a22 = m[1], a33 = m[2], a12 = m[3], a13 = m[4], a23 = m[5];
  std::array<double, 3> e{};
  const double p1 = a12 * a12 + a13 * a13 + a23 * a23;
  const double q = (a11 + a22 + a33) / 3.0;
  const double p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2.0 * p1;
  if (p2 <= 1e-300) {
    e = {a11, a22, a33};
  } else {
    const double p = std::sqrt(p2 / 6.0);
    const double b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
    const double b12 = a12 / p, b13 = a13 / p, b23 = a23 / p;
    const double det = b11 * (b22 * b33 - b23 * b23) - b12 * (b12 * b33 - b23 * b13) +
                       b13 * (b12 * b23 - b22 * b13);
    const double r = std::clamp(det / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    e[0] = q + 2.0 * p * std::cos(phi);
    e[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    e[1] = 3.0 * q - e[0] - e[2];
  }
  std::sort(e.begin(), e.end(), [](double x, double y) { return std::abs(x) < std::abs(y); });
  return e;
}

double frangi_response(const std::array<double, 3>& lambda, double alpha, double beta, double c,
                       bool bright_on_dark) {
  const double l1 = lambda[0], l2 = lambda[1], l3 = lambda[2];
  if (bright_on_dark ? (l2 > 0.0 || l3 > 0.0) : (l2 < 0.0 || l3 < 0.0)) return 0.0;
  const double a2 = std::abs(l2), a3 = std::abs(l3);
  if (a3 == 0.0 || a2 == 0.0) return 0.0;
  const double ra = a2 / a3;
  const double rb = std::abs(l1) / std::sqrt(a2 * a3);
  const double s2 = l1 * l1 + l2 * l2 + l3 * l3;
  const double v = (1.0 - std::exp(-ra * ra / (2.0 * alpha * alpha))) *
                   std::exp(-rb * rb / (2.0 * beta * beta)) *
                   (1.0 - std::exp(-s2 / (2.0 * c * c)));
  return std::clamp(v, 0.0, 1.0);
}

ScalarVolume frangi_vesselness(const ScalarVolume& vol, const VesselnessParams& params) {
  params.validate();
  const Dims& d = vol.dims();
  const Vec3& h = vol.geometry().spacing();
  const std::size_t n = vol.size();
  std::vector<float> best(n, 0.0f);
  std::vector<std::array<double, 3>> eig(n);

  for (double sigma : params.scales_mm) {
    std::vector<double> smooth = to_double(vol);
    smooth_buffer(smooth, d, {sigma / h.x, sigma / h.y, sigma / h.z});
    auto at = [&](int i, int j, int k) {
      i = std::clamp(i, 0, d[0] - 1);
      j = std::clamp(j, 0, d[1] - 1);
      k = std::clamp(k, 0, d[2] - 1);
      return smooth[vol.geometry().index(i, j, k)];
    };
    const double norm = sigma * sigma;
    std::vector<double> structure(static_cast<std::size_t>(d[2]), 0.0);
    parallel_for(0, d[2], [&](int k) {
      double max_s = 0.0;
      for (int j = 0; j < d[1]; ++j) {
        for (int i = 0; i < d[0]; ++i) {
          const double c0 = at(i, j, k);
          std::array<double, 6> hs{
              (at(i + 1, j, k) - 2 * c0 + at(i - 1, j, k)) / (h.x * h.x),
              (at(i, j + 1, k) - 2 * c0 + at(i, j - 1, k)) / (h.y * h.y),
              (at(i, j, k + 1) - 2 * c0 + at(i, j, k - 1)) / (h.z * h.z),
              (at(i + 1, j + 1, k) - at(i + 1, j - 1, k) - at(i - 1, j + 1, k) + at(i - 1, j - 1, k)) /
                  (4 * h.x * h.y),
              (at(i + 1, j, k + 1) - at(i + 1, j, k - 1) - at(i - 1, j, k + 1) + at(i - 1, j, k - 1)) /
                  (4 * h.x * h.z),
              (at(i, j + 1, k + 1) - at(i, j + 1, k - 1) - at(i, j - 1, k + 1) + at(i, j - 1, k - 1)) /
                  (4 * h.y * h.z),
          };
          for (double& v : hs) v *= norm;
          const auto e = symmetric_eigenvalues(hs);
          eig[vol.geometry().index(i, j, k)] = e;
          max_s = std::max(max_s, std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]));
        }
      }
      structure[k] = max_s;
    });
    const double c = params.c ? *params.c : 0.5 * *std::max_element(structure.begin(), structure.end());
    if (!(c > 0.0)) continue;  // flat image at this scale
    parallel_for(0, d[2], [&](int k) {
      for (int j = 0; j < d[1]; ++j) {
        for (int i = 0; i < d[0]; ++i) {
          const std::size_t idx = vol.geometry().index(i, j, k);
          const double v = frangi_response(eig[idx], params.alpha, params.beta, c, params.bright_on_dark);
          best[idx] = std::max(best[idx], static_cast<float>(v));
        }
      }
    });
  }
  return ScalarVolume(vol.geometry(), std::move(best));
}

RegionGrowResult region_grow_mask(const ScalarVolume& vol, const PointMm& seed, const RegionGrowParams& params) {
  params.validate();
  const VolumeGeometry& g = vol.geometry();
  if (!g.contains(seed)) throw Error(ErrorCode::OutOfBounds, "region-grow seed outside volume");
  const VoxelPos sv = g.voxel_of(seed);
  const Dims& d = g.dims();
  const int si = std::clamp(static_cast<int>(std::lround(sv.x)), 0, d[0] - 1);
  const int sj = std::clamp(static_cast<int>(std::lround(sv.y)), 0, d[1] - 1);
  const int sk = std::clamp(static_cast<int>(std::lround(sv.z)), 0, d[2] - 1);
  if (!(vol.at(si, sj, sk) >= params.threshold))
    throw Error(ErrorCode::SeedBelowThreshold, "seed voxel value below region-grow threshold");

  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (params.connectivity == 6 && manhattan != 1) continue;
        offsets.push_back({dx, dy, dz});
      }

  RegionGrowResult result{MaskVolume(g, 0), 0, false};
  std::deque<std::array<int, 3>> queue;
  result.mask.at(si, sj, sk) = 1;
  result.voxel_count = 1;
  queue.push_back({si, sj, sk});
  while (!queue.empty()) {
    const auto [i, j, k] = queue.front();
    queue.pop_front();
    for (const auto& o : offsets) {
      const int ni = i + o[0], nj = j + o[1], nk = k + o[2];
      if (!g.contains_index(ni, nj, nk)) continue;
      auto& m = result.mask.at(ni, nj, nk);
      if (m || !(vol.at(ni, nj, nk) >= params.threshold)) continue;
      if (result.voxel_count >= params.max_voxels) {
        result.capped = true;
        return result;
      }
      m = 1;
      ++result.voxel_count;
      queue.push_back({ni, nj, nk});
    }
  }
  return result;
}

}  // namespace vm
