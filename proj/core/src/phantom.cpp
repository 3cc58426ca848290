#include "vesselmark/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "vesselmark/format.hpp"
#include "vesselmark/parallel.hpp"
#include "vesselmark/rng.hpp"

namespace vm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Mat3 = std::array<Vec3, 3>;  // rows

Mat3 rotation(const Vec3& axis, double angle_deg) {
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a), C = 1.0 - c;
  const double x = axis.x, y = axis.y, z = axis.z;
  return {Vec3{c + x * x * C, x * y * C - z * s, x * z * C + y * s},
          Vec3{y * x * C + z * s, c + y * y * C, y * z * C - x * s},
          Vec3{z * x * C - y * s, z * y * C + x * s, c + z * z * C}};
}

Vec3 mul(const Mat3& m, const Vec3& v) { return {dot(m[0], v), dot(m[1], v), dot(m[2], v)}; }

Vec3 mul_transposed(const Mat3& m, const Vec3& v) { return m[0] * v.x + m[1] * v.y + m[2] * v.z; }

// Sinusoidal displacement at pivot-relative position v.
Vec3 sinusoid(const SyntheticTransform& t, const Vec3& v) {
  Vec3 d;
  for (int a = 0; a < 3; ++a) {
    const auto& s = t.sinusoid[a];
    d[a] = s.amplitude_mm == 0.0 ? 0.0 : s.amplitude_mm * std::sin(kTwoPi * v[(a + 1) % 3] / s.wavelength_mm + s.phase);
  }
  return d;
}

}  // namespace

void SyntheticTransform::validate() const {
  if (std::abs(norm(axis) - 1.0) > 1e-9) throw Error(ErrorCode::InvalidParams, "rotation axis must be a unit vector");
  if (!(angle_deg >= 0.0 && angle_deg <= 50.0)) throw Error(ErrorCode::InvalidParams, "angle must lie in [0, 50] degrees");
  if (!(scale >= 0.9 && scale <= 1.1)) throw Error(ErrorCode::InvalidParams, "scale must lie in [0.9, 1.1]");
  for (const auto& s : sinusoid) {
    if (!(s.wavelength_mm > 0.0) || !std::isfinite(s.amplitude_mm) || !std::isfinite(s.phase))
      throw Error(ErrorCode::InvalidParams, "sinusoid needs finite amplitude/phase and positive wavelength");
  }
}

double SyntheticTransform::lipschitz() const {
  double l = 0.0;
  for (const auto& s : sinusoid) l = std::max(l, kTwoPi * std::abs(s.amplitude_mm) / s.wavelength_mm);
  return l;
}

SyntheticTransform random_transform(std::uint64_t seed, const PointMm& pivot, const TransformRanges& r) {
  Rng rng(seed);
  SyntheticTransform t;
  t.seed = seed;
  t.pivot = pivot;
  t.axis = rng.unit_vector();
  t.axis = t.axis / norm(t.axis);
  t.angle_deg = rng.uniform(0.0, r.max_angle_deg);
  t.scale = rng.uniform(r.min_scale, r.max_scale);
  for (auto& s : t.sinusoid) {
    s.amplitude_mm = rng.uniform(r.min_amplitude_mm, r.max_amplitude_mm);
    s.wavelength_mm = rng.uniform(r.min_wavelength_mm, r.max_wavelength_mm);
    s.phase = rng.uniform(0.0, kTwoPi);
  }
  return t;
}

SyntheticTransform identity_transform(const PointMm& pivot) {
  SyntheticTransform t;
  t.pivot = pivot;
  return t;
}

PointMm map_point_forward(const SyntheticTransform& t, const PointMm& p) {
  const Vec3 v = mul(rotation(t.axis, t.angle_deg), offset(t.pivot, p) * t.scale);
  return translate(t.pivot, v + sinusoid(t, v));
}

PointMm invert_point(const SyntheticTransform& t, const PointMm& q, double tol_mm) {
  // Solve v + s(v) = w for the rotated/scaled offset v.
  const Vec3 w = offset(t.pivot, q);
  Vec3 v = w;
  bool ok = false;
  for (int it = 0; it < 100; ++it) {
    const Vec3 residual = v + sinusoid(t, v) - w;
    if (!is_finite(residual)) break;
    if (norm(residual) < tol_mm) {
      ok = true;
      break;
    }
    v = w - sinusoid(t, v);
  }
  if (!ok) throw Error(ErrorCode::NoConvergence, "sinusoid inversion did not converge in 100 steps");
  const Vec3 u = mul_transposed(rotation(t.axis, t.angle_deg), v) / t.scale;
  return translate(t.pivot, u);
}

ScalarVolume warp_backward(const ScalarVolume& source, const SyntheticTransform& t, const VolumeGeometry& grid) {
  ScalarVolume out(grid);
  const Dims& d = grid.dims();
  parallel_for(0, d[2], [&](int k) {
    for (int j = 0; j < d[1]; ++j)
      for (int i = 0; i < d[0]; ++i) {
        const PointMm q = grid.world_of({double(i), double(j), double(k)});
        out.at(i, j, k) = static_cast<float>(sample_clamped(source, invert_point(t, q)));
      }
  });
  return out;
}

PhantomPair make_phantom_pair(const ScalarVolume& image, const PointMm& landmark, std::uint64_t seed,
                              const PhantomOptions& opt) {
  return make_phantom_pair(image, landmark, random_transform(seed, landmark), opt);
}

PhantomPair make_phantom_pair(const ScalarVolume& image, const PointMm& landmark, const SyntheticTransform& t,
                              const PhantomOptions& opt) {
  if (!image.geometry().contains(landmark)) throw Error(ErrorCode::OutOfBounds, "landmark outside image");
  t.validate();
  PhantomPair pair;
  pair.patch1 = resample_isotropic(extract_subvolume(image, landmark, opt.patch_mm), opt.spacing_mm);
  pair.transform = t;
  pair.patch2 = warp_backward(pair.patch1, t, pair.patch1.geometry());
  pair.gt_landmark1 = landmark;
  pair.gt_landmark2 = map_point_forward(t, landmark);
  return pair;
}

ObserverPatches make_observer_patch_pair(const ScalarVolume& img1, const ScalarVolume& img2, const LandmarkPair& pair,
                                         std::uint64_t seed, double side_mm, int max_shift) {
  if (!img1.geometry().contains(pair.p1) || !img2.geometry().contains(pair.p2))
    throw Error(ErrorCode::OutOfBounds, "landmark " + std::to_string(pair.id) + " outside its image");
  Rng rng(seed);
  ObserverPatches out;
  for (auto& s : out.shift) s = static_cast<int>(rng.uniform_int(-max_shift, max_shift));
  const Vec3& h = img2.geometry().spacing();
  const PointMm c2{pair.p2.x + out.shift[0] * h.x, pair.p2.y + out.shift[1] * h.y, pair.p2.z + out.shift[2] * h.z};
  out.patch1 = extract_subvolume(img1, pair.p1, side_mm);
  // A shifted centre that falls off the image is pulled back onto its face.
  const VolumeGeometry& g2 = img2.geometry();
  const PointMm center2 = g2.contains(c2) ? c2 : g2.world_of(clamp_to_domain(g2, g2.voxel_of(c2)));
  out.patch2 = extract_subvolume(img2, center2, side_mm);
  return out;
}

std::string format_manifest(const PhantomPair& pair) {
  const auto& t = pair.transform;
  auto triple = [](const auto& v) { return format_double(v.x) + ' ' + format_double(v.y) + ' ' + format_double(v.z); };
  std::ostringstream os;
  os << "# vesselmark phantom manifest\n";
  os << "order scale,rotate,sinusoid\n";
  os << "seed " << t.seed << '\n';
  os << "pivot_mm " << triple(t.pivot) << '\n';
  os << "axis " << triple(t.axis) << '\n';
  os << "angle_deg " << format_double(t.angle_deg) << '\n';
  os << "scale " << format_double(t.scale) << '\n';
  const char* names[3] = {"sinusoid_x", "sinusoid_y", "sinusoid_z"};
  for (int a = 0; a < 3; ++a) {
    const auto& s = t.sinusoid[a];
    os << names[a] << ' ' << format_double(s.amplitude_mm) << ' ' << format_double(s.wavelength_mm) << ' '
       << format_double(s.phase) << '\n';
  }
  os << "gt_landmark1_mm " << triple(pair.gt_landmark1) << '\n';
  os << "gt_landmark2_mm " << triple(pair.gt_landmark2) << '\n';
  const auto& g = pair.patch1.geometry();
  os << "patch_dims " << g.dims()[0] << ' ' << g.dims()[1] << ' ' << g.dims()[2] << '\n';
  os << "patch_spacing_mm " << triple(g.spacing()) << '\n';
  os << "patch_origin_mm " << triple(g.origin()) << '\n';
  return os.str();
}

SyntheticTransform parse_manifest_transform(const std::string& text) {
  std::map<std::string, std::vector<double>> kv;
  std::istringstream in(text);
  std::string line;
  std::uint64_t seed = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "seed") {
      ls >> seed;
      continue;
    }
    if (key == "order") continue;
    std::string tok;
    std::vector<double> vals;
    while (ls >> tok) {
      double v;
      if (!parse_double(tok, v)) throw Error(ErrorCode::BadConfig, "manifest: bad number in '" + key + "'");
      vals.push_back(v);
    }
    kv[key] = vals;
  }
  auto get = [&](const std::string& key, std::size_t n) {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.size() != n) throw Error(ErrorCode::BadConfig, "manifest: missing or bad '" + key + "'");
    return it->second;
  };
  SyntheticTransform t;
  t.seed = seed;
  auto p = get("pivot_mm", 3);
  t.pivot = {p[0], p[1], p[2]};
  auto ax = get("axis", 3);
  t.axis = {ax[0], ax[1], ax[2]};
  t.angle_deg = get("angle_deg", 1)[0];
  t.scale = get("scale", 1)[0];
  const char* names[3] = {"sinusoid_x", "sinusoid_y", "sinusoid_z"};
  for (int a = 0; a < 3; ++a) {
    auto s = get(names[a], 3);
    t.sinusoid[a] = {s[0], s[1], s[2]};
  }
  return t;
}

}  // namespace vm
