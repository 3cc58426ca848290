#include "vesselmark/sphere_growing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "vesselmark/parallel.hpp"

namespace vm {

void GrowConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(lambda1) || !positive(lambda2) || !positive(f_int))
    throw Error(ErrorCode::InvalidParams, "lambda1, lambda2 and f_int must be positive");
  if (iterations < 1) throw Error(ErrorCode::InvalidParams, "iterations must be >= 1");
  if (!positive(init_radius)) throw Error(ErrorCode::InvalidParams, "init_radius must be positive");
  if (!positive(target_spacing)) throw Error(ErrorCode::InvalidParams, "target_spacing must be positive");
  if (!(window_lo < window_hi)) throw Error(ErrorCode::InvalidWindow, "window lower bound must be below upper bound");
  if (!positive(sigma)) throw Error(ErrorCode::InvalidSigma, "sigma must be positive");
  if (!positive(subvolume_mm)) throw Error(ErrorCode::InvalidParams, "subvolume_mm must be positive");
  if (!positive(max_radius) || !positive(max_center_drift))
    throw Error(ErrorCode::InvalidParams, "divergence bounds must be positive");
  if (settle_window < 1 || !positive(settle_tol))
    throw Error(ErrorCode::InvalidParams, "settle window and tolerance must be positive");
}

std::string_view to_string(SourceImage s) {
  switch (s) {
    case SourceImage::original: return "original";
    case SourceImage::vesselness_mask: return "vesselness_mask";
    case SourceImage::manual_mask: return "manual_mask";
  }
  return "original";
}

std::string_view to_string(GrowOutcome o) {
  switch (o) {
    case GrowOutcome::converged: return "converged";
    case GrowOutcome::diverged: return "diverged";
    case GrowOutcome::capped: return "capped";
  }
  return "capped";
}

std::string_view to_string(PairType t) { return t == PairType::type1 ? "type1" : "type2"; }

VectorField opposing_force_field(const ScalarVolume& image, const VectorField& grad) {
  if (!image.geometry().same_as(grad.geometry()))
    throw Error(ErrorCode::GeometryMismatch, "image and gradient geometries differ");
  VectorField u(image.geometry());
  auto iv = image.values();
  auto gv = grad.values();
  auto uv = u.values();
  for (std::size_t n = 0; n < iv.size(); ++n) {
    const double g = norm(gv[n]);
    const double weight = 1.0 - std::clamp(static_cast<double>(iv[n]), 0.0, 1.0);
    // Points up the intensity gradient, i.e. from the wall into the bright
    // lumen, so that wall voxels push the sphere back inside.
    uv[n] = (g < kGradientEpsilon || weight == 0.0) ? Vec3{} : gv[n] * (weight / g);
  }
  return u;
}

SphereState step(const SphereState& state, const VectorField& u, const GrowConfig& cfg) {
  const Dims& d = u.dims();
  const VoxelPos& c = state.center;
  const double r = state.radius;
  const double reach = r + 0.5;
  const int i0 = std::max(0, static_cast<int>(std::floor(c.x - reach)));
  const int i1 = std::min(d[0] - 1, static_cast<int>(std::ceil(c.x + reach)));
  const int j0 = std::max(0, static_cast<int>(std::floor(c.y - reach)));
  const int j1 = std::min(d[1] - 1, static_cast<int>(std::ceil(c.y + reach)));
  const int k0 = std::max(0, static_cast<int>(std::floor(c.z - reach)));
  const int k1 = std::min(d[2] - 1, static_cast<int>(std::ceil(c.z + reach)));

  Vec3 force_sum{};
  double radial_sum = 0.0;
  std::size_t count = 0;
  std::size_t contacts = 0;
  for (int k = k0; k <= k1; ++k) {
    for (int j = j0; j <= j1; ++j) {
      for (int i = i0; i <= i1; ++i) {
        const Vec3 off{i - c.x, j - c.y, k - c.z};
        const double dist = norm(off);
        if (std::abs(dist - r) > 0.5) continue;
        const Vec3& f = u.at(i, j, k);
        force_sum += f;
        radial_sum += dot(off, f);
        ++count;
        if (f.x != 0.0 || f.y != 0.0 || f.z != 0.0) ++contacts;
      }
    }
  }
  if (count == 0) throw Error(ErrorCode::EmptySupport, "no voxel of the sphere surface lies inside the grid");

  const double inv = 1.0 / static_cast<double>(count);
  // The centre step averages over the shell voxels that feel a wall; a plain
  // shell mean dilutes a one-sided contact until the centre barely moves.
  const double cinv = contacts ? 1.0 / static_cast<double>(contacts) : inv;
  SphereState next;
  next.center = translate(c, force_sum * (cfg.lambda1 * cinv));
  next.radius = std::max(cfg.init_radius, r + cfg.f_int + cfg.lambda2 * radial_sum * inv);
  next.iteration = state.iteration + 1;
  return next;
}

namespace {

bool settled(const std::vector<SphereState>& states, const GrowConfig& cfg) {
  const int w = cfg.settle_window;
  if (static_cast<int>(states.size()) < w + 1) return false;
  const auto first = states.end() - (w + 1);
  double r_lo = first->radius, r_hi = first->radius;
  for (auto it = first; it != states.end(); ++it) {
    r_lo = std::min(r_lo, it->radius);
    r_hi = std::max(r_hi, it->radius);
    if (distance(it->center, states.back().center) > cfg.settle_tol) return false;
  }
  return r_hi - r_lo <= cfg.settle_tol;
}

}  // namespace

GrowTrace grow_sphere(const VectorField& u, const VoxelPos& seed, const GrowConfig& cfg) {
  cfg.validate();
  GrowTrace trace;
  trace.grid = u.geometry();
  const VolumeGeometry& g = u.geometry();
  if (!g.contains(seed)) throw Error(ErrorCode::OutOfBounds, "sphere seed outside the working grid");
  trace.states.push_back({seed, cfg.init_radius, 0});
  const PointMm seed_mm = g.world_of(seed);
  for (int n = 0; n < cfg.iterations; ++n) {
    SphereState next = step(trace.states.back(), u, cfg);
    trace.states.push_back(next);
    const bool escaped = !g.contains(next.center);
    const double drift = distance(g.world_of(next.center), seed_mm);
    if (escaped || next.radius > cfg.max_radius || drift > cfg.max_center_drift) {
      trace.outcome = GrowOutcome::diverged;
      return trace;
    }
  }
  trace.outcome = settled(trace.states, cfg) ? GrowOutcome::converged : GrowOutcome::capped;
  return trace;
}

ScalarVolume working_image(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg,
                           bool apply_window) {
  ScalarVolume sub = extract_subvolume(image, seed, cfg.subvolume_mm);
  ScalarVolume iso = resample_isotropic(sub, cfg.target_spacing);
  return apply_window ? threshold_normalize(iso, cfg.window_lo, cfg.window_hi) : iso;
}

namespace {

RefineResult grow_on_working(const ScalarVolume& working, const PointMm& seed, const GrowConfig& cfg,
                             SourceImage source) {
  const VectorField grad = smoothed_gradient(working, cfg.sigma);
  const VectorField u = opposing_force_field(working, grad);
  const VoxelPos seed_vox = clamp_to_domain(working.geometry(), working.geometry().voxel_of(seed));
  RefineResult result;
  result.trace = grow_sphere(u, seed_vox, cfg);
  result.trace.source = source;
  result.point = working.geometry().world_of(result.trace.states.back().center);
  return result;
}

ScalarVolume mask_to_image(const MaskVolume& mask) {
  ScalarVolume out(mask.geometry());
  auto m = mask.values();
  auto o = out.values();
  for (std::size_t n = 0; n < m.size(); ++n) o[n] = m[n] ? 1.0f : 0.0f;
  return out;
}

}  // namespace

RefineResult refine_bifurcation(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg) {
  cfg.validate();
  if (!image.geometry().contains(seed)) throw Error(ErrorCode::OutOfBounds, "seed outside image");
  return grow_on_working(working_image(image, seed, cfg, true), seed, cfg, SourceImage::original);
}

RefineResult refine_on_normalized(const ScalarVolume& normalized, const PointMm& seed, const GrowConfig& cfg,
                                  SourceImage source) {
  cfg.validate();
  if (!normalized.geometry().contains(seed)) throw Error(ErrorCode::OutOfBounds, "seed outside image");
  return grow_on_working(working_image(normalized, seed, cfg, false), seed, cfg, source);
}

RefineResult refine_with_fallback(const ScalarVolume& image, const PointMm& seed, const GrowConfig& cfg,
                                  const VesselnessParams& vp, const RegionGrowParams& rp,
                                  const MaskVolume* manual_mask) {
  cfg.validate();
  if (!image.geometry().contains(seed)) throw Error(ErrorCode::OutOfBounds, "seed outside image");
  const ScalarVolume working = working_image(image, seed, cfg, true);
  RefineResult first = grow_on_working(working, seed, cfg, SourceImage::original);
  if (first.trace.outcome == GrowOutcome::converged) return first;

  std::optional<RefineResult> mask_run;
  const ScalarVolume vesselness = frangi_vesselness(working, vp);
  try {
    const RegionGrowResult grown = region_grow_mask(vesselness, seed, rp);
    mask_run = grow_on_working(mask_to_image(grown.mask), seed, cfg, SourceImage::vesselness_mask);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SeedBelowThreshold && e.code() != ErrorCode::EmptySupport) throw;
  }
  if (mask_run && mask_run->trace.outcome == GrowOutcome::converged) return *mask_run;

  if (manual_mask) {
    return refine_on_normalized(mask_to_image(*manual_mask), seed, cfg, SourceImage::manual_mask);
  }
  RefineResult failed = mask_run ? *mask_run : first;
  failed.trace.source = SourceImage::vesselness_mask;
  failed.trace.outcome = GrowOutcome::diverged;
  return failed;
}

PairType classify_pair_type(double d_large_mm, double d_small_mm) {
  if (!(d_large_mm > 0.0) || !(d_small_mm > 0.0))
    throw Error(ErrorCode::InvalidDiameter, "vessel diameters must be positive");
  const double hi = std::max(d_large_mm, d_small_mm);
  const double lo = std::min(d_large_mm, d_small_mm);
  return hi >= 2.5 * lo ? PairType::type2 : PairType::type1;
}

std::string format_trace(const GrowTrace& trace, const GrowConfig& cfg) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line,
                "# lambda1=%g lambda2=%g f_int=%g iterations=%d init_radius=%g target_spacing=%g "
                "window=%g,%g sigma=%g\n",
                cfg.lambda1, cfg.lambda2, cfg.f_int, cfg.iterations, cfg.init_radius, cfg.target_spacing,
                cfg.window_lo, cfg.window_hi, cfg.sigma);
  os << line;
  os << "# source=" << to_string(trace.source) << " outcome=" << to_string(trace.outcome) << '\n';
  os << "iteration,x_mm,y_mm,z_mm,radius_mm,source\n";
  const double h = trace.grid.spacing().x;
  for (const auto& s : trace.states) {
    const PointMm p = trace.grid.world_of(s.center);
    std::snprintf(line, sizeof line, "%d,%.6f,%.6f,%.6f,%.6f,", s.iteration, p.x, p.y, p.z, s.radius * h);
    os << line << to_string(trace.source) << '\n';
  }
  return os.str();
}

}  // namespace vm
