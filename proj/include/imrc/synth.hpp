// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "imrc/camera.hpp"
#include "imrc/chamfer.hpp"
#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"
#include "imrc/sh.hpp"

namespace imrc {

// A scene defined by closed-form fields. density is finite and >= 0
// everywhere; color maps (point, unit direction toward the viewer) into
// [0,1]^3 and is band-limited to spherical-harmonic degree <= 2 by
// construction. sample_surface (optional) draws uniform points on the
// nominal surface for ground-truth clouds.
struct AnalyticScene {
  std::function<double(const Vec3&)> density;
  std::function<Color(const Vec3&, const Vec3&)> color;
  Vec3 bbox_min{0.0, 0.0, 0.0};
  Vec3 bbox_max{1.0, 1.0, 1.0};
  std::function<Vec3(std::mt19937_64&)> sample_surface;
};

struct SceneParams {
  // Sphere radius or cube half-extent; <= 0 picks the factory default
  // (0.35 for spheres, 0.31 for the cube).
  double radius = 0.0;
  // Width of the linear density ramp at the surface. One voxel edge at the
  // coarsest resolution the scene will be baked at keeps trilinear sampling
  // and marching cubes well behaved.
  double band_width = 1.0 / 31.0;
  // Peak density; <= 0 defaults to 50 / band_width, which makes the shell
  // effectively opaque at any sensible ray step.
  double sigma_max = 0.0;
};

namespace detail {

struct ResolvedScene {
  double radius;
  double band_width;
  double sigma_max;
  Vec3 center;
};

inline ResolvedScene resolve_scene_params(const SceneParams& p, double default_radius) {
  if (!(p.band_width > 0.0)) throw Error("scene: band_width must be positive");
  ResolvedScene r;
  r.radius = p.radius > 0.0 ? p.radius : default_radius;
  r.band_width = p.band_width;
  r.sigma_max = p.sigma_max > 0.0 ? p.sigma_max : 50.0 / p.band_width;
  r.center = {0.5, 0.5, 0.5};
  return r;
}

// Solid body with a one-band linear ramp: sigma_max deep inside, 0 outside,
// crossing sigma_max/2 exactly at signed distance 0.
inline double ramp_density(double signed_dist, double band_width, double sigma_max) {
  const double t = std::clamp(0.5 - signed_dist / band_width, 0.0, 1.0);
  return sigma_max * t;
}

inline double sphere_signed_dist(const Vec3& p, const Vec3& center, double radius) {
  return norm(p - center) - radius;
}

// Signed distance to an axis-aligned cube surface (negative inside).
inline double cube_signed_dist(const Vec3& p, const Vec3& center, double half_extent) {
  const Vec3 q = {std::abs(p.x - center.x) - half_extent, std::abs(p.y - center.y) - half_extent,
                  std::abs(p.z - center.z) - half_extent};
  const Vec3 outside = {std::max(q.x, 0.0), std::max(q.y, 0.0), std::max(q.z, 0.0)};
  const double inside = std::min(std::max(q.x, std::max(q.y, q.z)), 0.0);
  return norm(outside) + inside;
}

// Two-tone partition by diagonal quadrant in the xy plane.
inline bool quadrant_flag(const Vec3& p, const Vec3& center) {
  return (p.x > center.x) != (p.y > center.y);
}

inline Vec3 sample_sphere_surface(std::mt19937_64& rng, const Vec3& center, double radius) {
  return center + radius * uniform_unit_dir(rng);
}

inline Vec3 sample_cube_surface(std::mt19937_64& rng, const Vec3& center, double half_extent) {
  // Six equal-area faces: pick one, then a uniform point on it.
  const int face = static_cast<int>(uniform_double(rng) * 6.0) % 6;
  const double u = (2.0 * uniform_double(rng) - 1.0) * half_extent;
  const double v = (2.0 * uniform_double(rng) - 1.0) * half_extent;
  const double s = (face % 2 == 0) ? half_extent : -half_extent;
  Vec3 offset;
  switch (face / 2) {
    case 0: offset = {s, u, v}; break;
    case 1: offset = {u, s, v}; break;
    default: offset = {u, v, s}; break;
  }
  return center + offset;
}

}  // namespace detail

inline AnalyticScene make_empty_scene() {
  AnalyticScene scene;
  scene.density = [](const Vec3&) { return 0.0; };
  scene.color = [](const Vec3&, const Vec3&) { return Color{0.0, 0.0, 0.0}; };
  return scene;
}

// Opaque Lambertian sphere of a single constant color.
inline AnalyticScene make_constant_sphere_scene(const SceneParams& params = {}) {
  const auto r = detail::resolve_scene_params(params, 0.35);
  AnalyticScene scene;
  scene.density = [r](const Vec3& p) {
    return detail::ramp_density(detail::sphere_signed_dist(p, r.center, r.radius), r.band_width,
                                r.sigma_max);
  };
  scene.color = [](const Vec3&, const Vec3&) { return Color{0.7, 0.4, 0.2}; };
  scene.sample_surface = [r](std::mt19937_64& rng) {
    return detail::sample_sphere_surface(rng, r.center, r.radius);
  };
  return scene;
}

// Opaque Lambertian sphere with a high-contrast two-tone quadrant texture.
// Wrong geometry mixes the tones across views, which is what the metric must
// punish.
inline AnalyticScene make_textured_sphere_scene(const SceneParams& params = {}) {
  const auto r = detail::resolve_scene_params(params, 0.35);
  AnalyticScene scene;
  scene.density = [r](const Vec3& p) {
    return detail::ramp_density(detail::sphere_signed_dist(p, r.center, r.radius), r.band_width,
                                r.sigma_max);
  };
  scene.color = [r](const Vec3& p, const Vec3&) {
    return detail::quadrant_flag(p, r.center) ? Color{0.9, 0.15, 0.1} : Color{0.1, 0.25, 0.9};
  };
  scene.sample_surface = [r](std::mt19937_64& rng) {
    return detail::sample_sphere_surface(rng, r.center, r.radius);
  };
  return scene;
}

// Axis-aligned two-tone cube; same texture scheme as the sphere.
inline AnalyticScene make_textured_cube_scene(const SceneParams& params = {}) {
  const auto r = detail::resolve_scene_params(params, 0.31);
  AnalyticScene scene;
  scene.density = [r](const Vec3& p) {
    return detail::ramp_density(detail::cube_signed_dist(p, r.center, r.radius), r.band_width,
                                r.sigma_max);
  };
  scene.color = [r](const Vec3& p, const Vec3&) {
    return detail::quadrant_flag(p, r.center) ? Color{0.9, 0.15, 0.1} : Color{0.1, 0.25, 0.9};
  };
  scene.sample_surface = [r](std::mt19937_64& rng) {
    return detail::sample_cube_surface(rng, r.center, r.radius);
  };
  return scene;
}

// Two-tone sphere whose color carries explicit degree-1 and degree-2 angular
// terms on top of each tone. Coefficients are scaled so every channel stays
// inside [0,1] for all unit directions: max deviation is
// 0.30*0.4886 + 0.15*0.5463 = 0.228, within the 0.30 headroom of the tones.
inline AnalyticScene make_glossy_sphere_scene(const SceneParams& params = {}) {
  const auto r = detail::resolve_scene_params(params, 0.35);
  AnalyticScene scene;
  scene.density = [r](const Vec3& p) {
    return detail::ramp_density(detail::sphere_signed_dist(p, r.center, r.radius), r.band_width,
                                r.sigma_max);
  };
  scene.color = [r](const Vec3& p, const Vec3& dir) {
    const Color base = detail::quadrant_flag(p, r.center) ? Color{0.60, 0.45, 0.35}
                                                          : Color{0.35, 0.45, 0.60};
    const double y11 = -detail::kSh1 * dir.x;
    const double y22 = detail::kSh2[4] * (dir.x * dir.x - dir.y * dir.y);
    return Color{base.r + 0.30 * y11 + 0.15 * y22, base.g + 0.25 * y11 - 0.10 * y22,
                 base.b - 0.30 * y11 + 0.15 * y22};
  };
  scene.sample_surface = [r](std::mt19937_64& rng) {
    return detail::sample_sphere_surface(rng, r.center, r.radius);
  };
  return scene;
}

inline PointCloud sample_scene_surface(const AnalyticScene& scene, std::size_t n,
                                       std::uint64_t seed) {
  if (!scene.sample_surface) throw Error("sample_scene_surface: scene has no surface sampler");
  if (n == 0) throw Error("sample_scene_surface: sample count must be positive");
  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cloud.points.push_back(scene.sample_surface(rng));
  return cloud;
}

// Evaluates the analytic density at every vertex of a regular grid over the
// scene bbox.
inline DensityVolume bake_volume(const AnalyticScene& scene, const GridIndex& resolution) {
  if (resolution.x < 16 || resolution.y < 16 || resolution.z < 16) {
    throw Error("bake_volume: resolution must be at least 16 per axis");
  }
  DensityVolume vol = make_volume(resolution, scene.bbox_min, scene.bbox_max);
  for (int z = 0; z < resolution.z; ++z) {
    for (int y = 0; y < resolution.y; ++y) {
      for (int x = 0; x < resolution.x; ++x) {
        const GridIndex idx{x, y, z};
        const double sigma = scene.density(vol.vertex_position(idx));
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
          throw Error("bake_volume: scene density must be finite and non-negative");
        }
        vol.values[linear_index(idx, resolution)] = static_cast<float>(sigma);
      }
    }
  }
  return vol;
}

// Forward-renders each camera with the standard emission-absorption
// quadrature: samples at t0 + i*step inside the scene bbox, alpha from the
// spacing to the previous sample, color queried with the unit direction from
// the sample back toward the camera. Rays that miss or never saturate leave
// the remaining weight on a black background. Marching stops once the
// accumulated optical depth exceeds kMaxOpticalDepth; every later term is
// below double rounding at the accumulated magnitudes.
inline std::vector<ImageBuffer> render_views(const AnalyticScene& scene,
                                             std::span<const CameraModel> cams, double step) {
  if (!(step > 0.0)) throw Error("render_views: step must be positive");
  std::vector<ImageBuffer> images;
  images.reserve(cams.size());
  for (const CameraModel& cam : cams) {
    ImageBuffer img;
    img.width = cam.width;
    img.height = cam.height;
    img.pixels.assign(static_cast<std::size_t>(cam.width) * cam.height, Color{0.0, 0.0, 0.0});
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        const Ray ray = cam.pixel_ray(u, v);
        double t0 = 0.0;
        double t1 = 0.0;
        if (!intersect_bbox(scene.bbox_min, scene.bbox_max, ray.origin, ray.dir, t0, t1)) {
          continue;
        }
        Color accum{0.0, 0.0, 0.0};
        double tau = 0.0;
        double prev_t = t0;
        const std::size_t n_steps = static_cast<std::size_t>((t1 - t0) / step) + 1;
        for (std::size_t i = 0; i < n_steps; ++i) {
          const double t = t0 + static_cast<double>(i) * step;
          const Vec3 p = ray.origin + t * ray.dir;
          const double sigma = scene.density(p);
          const double delta = t - prev_t;
          prev_t = t;
          if (sigma > 0.0 && delta > 0.0) {
            const double alpha = -std::expm1(-sigma * delta);
            const double transmittance = std::exp(-tau);
            accum += (transmittance * alpha) * scene.color(p, normalize(cam.origin - p));
            tau += sigma * delta;
            if (tau > kMaxOpticalDepth) break;
          }
        }
        img.at(u, v) = accum;
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

enum class PerturbKind { kDilate, kErode, kTranslate, kFloaters };

struct Perturbation {
  PerturbKind kind = PerturbKind::kDilate;
  // Voxel units: morphology ball radius, translation distance, or blob count
  // for floaters.
  double magnitude = 1.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<GridIndex> ball_offsets(double radius) {
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  std::vector<GridIndex> offsets;
  for (int dz = -r; dz <= r; ++dz) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (dx * dx + dy * dy + dz * dz <= r2) offsets.push_back({dx, dy, dz});
      }
    }
  }
  return offsets;
}

// Morphological max/min over a Euclidean voxel ball with zero padding.
inline DensityVolume morphology_filter(const DensityVolume& vol, double radius, bool dilate) {
  const auto offsets = ball_offsets(radius);
  DensityVolume out = vol;
  const GridIndex res = vol.resolution;
  for (int z = 0; z < res.z; ++z) {
    for (int y = 0; y < res.y; ++y) {
      for (int x = 0; x < res.x; ++x) {
        float best = dilate ? 0.0f : std::numeric_limits<float>::max();
        for (const GridIndex& o : offsets) {
          const int sx = x + o.x;
          const int sy = y + o.y;
          const int sz = z + o.z;
          float v = 0.0f;  // zero padding outside the grid
          if (sx >= 0 && sx < res.x && sy >= 0 && sy < res.y && sz >= 0 && sz < res.z) {
            v = vol.values[linear_index({sx, sy, sz}, res)];
          }
          best = dilate ? std::max(best, v) : std::min(best, v);
        }
        out.values[linear_index({x, y, z}, res)] = best;
      }
    }
  }
  return out;
}

}  // namespace detail

// Geometry-only corruptions of a density volume, used to verify that the
// metric ranks the unperturbed field above every corrupted variant.
inline DensityVolume apply_perturbation(const DensityVolume& vol, const Perturbation& p) {
  vol.validate();
  if (!(p.magnitude > 0.0)) throw Error("apply_perturbation: magnitude must be positive");

  switch (p.kind) {
    case PerturbKind::kDilate:
      return detail::morphology_filter(vol, p.magnitude, true);
    case PerturbKind::kErode: {
      DensityVolume out = detail::morphology_filter(vol, p.magnitude, false);
      const bool all_zero =
          std::all_of(out.values.begin(), out.values.end(), [](float v) { return v == 0.0f; });
      if (all_zero) throw DegenerateFieldError("apply_perturbation: erosion removed all density");
      return out;
    }
    case PerturbKind::kTranslate: {
      const int shift = static_cast<int>(std::lround(p.magnitude));
      DensityVolume out = vol;
      const GridIndex res = vol.resolution;
      for (int z = 0; z < res.z; ++z) {
        for (int y = 0; y < res.y; ++y) {
          for (int x = 0; x < res.x; ++x) {
            const int sx = x - shift;
            const float v = (sx >= 0 && sx < res.x)
                                ? vol.values[linear_index({sx, y, z}, res)]
                                : 0.0f;
            out.values[linear_index({x, y, z}, res)] = v;
          }
        }
      }
      return out;
    }
    case PerturbKind::kFloaters: {
      const int count = static_cast<int>(std::lround(p.magnitude));
      const float amplitude = *std::max_element(vol.values.begin(), vol.values.end());
      if (!(amplitude > 0.0f)) {
        throw DegenerateFieldError("apply_perturbation: floaters need a non-empty field");
      }
      DensityVolume out = vol;
      const GridIndex res = vol.resolution;
      const Vec3 spacing = vol.spacing();
      const double voxel = std::min(spacing.x, std::min(spacing.y, spacing.z));
      const Vec3 center = 0.5 * (vol.bbox_min + vol.bbox_max);
      const Vec3 half = 0.5 * (vol.bbox_max - vol.bbox_min);
      const double hmin = std::min(half.x, std::min(half.y, half.z));

      // A candidate center is valid when every vertex within a 3-voxel
      // Euclidean ball is empty, so blobs change geometry without touching
      // existing surfaces. Vertices outside the grid count as empty.
      auto clear_of_surface = [&](const Vec3& c) {
        const double reach = 3.0 * voxel;
        const int x0 = std::max(0, static_cast<int>(std::ceil((c.x - reach - vol.bbox_min.x) / spacing.x)));
        const int y0 = std::max(0, static_cast<int>(std::ceil((c.y - reach - vol.bbox_min.y) / spacing.y)));
        const int z0 = std::max(0, static_cast<int>(std::ceil((c.z - reach - vol.bbox_min.z) / spacing.z)));
        const int x1 = std::min(res.x - 1, static_cast<int>(std::floor((c.x + reach - vol.bbox_min.x) / spacing.x)));
        const int y1 = std::min(res.y - 1, static_cast<int>(std::floor((c.y + reach - vol.bbox_min.y) / spacing.y)));
        const int z1 = std::min(res.z - 1, static_cast<int>(std::floor((c.z + reach - vol.bbox_min.z) / spacing.z)));
        for (int sz = z0; sz <= z1; ++sz) {
          for (int sy = y0; sy <= y1; ++sy) {
            for (int sx = x0; sx <= x1; ++sx) {
              const GridIndex idx{sx, sy, sz};
              if (norm(vol.vertex_position(idx) - c) > reach) continue;
              if (vol.values[linear_index(idx, res)] != 0.0f) return false;
            }
          }
        }
        return true;
      };

      std::mt19937_64 rng(p.seed);
      std::vector<Vec3> centers;
      for (int b = 0; b < count; ++b) {
        bool placed = false;
        for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
          // Candidates sit in the equatorial shell between the object and a
          // surrounding camera ring, cycling through the four cardinal
          // azimuths with jitter. There a blob occludes the surface in many
          // views and spans regions where the backdrop changes appearance
          // with viewpoint, so it cannot hide behind a locally constant
          // background.
          const double phi = (b % 4) * 0.5 * std::numbers::pi +
                             (uniform_double(rng) - 0.5) * 0.6;
          const double rho = hmin * (0.74 + 0.21 * uniform_double(rng));
          const double z_off = (uniform_double(rng) - 0.5) * 0.3 * hmin;
          const Vec3 c =
              center + Vec3{rho * std::cos(phi), rho * std::sin(phi), z_off};
          if (!clear_of_surface(c)) continue;
          bool separated = true;
          for (const Vec3& other : centers) {
            if (norm(c - other) < 4.0 * voxel) {
              separated = false;
              break;
            }
          }
          if (!separated) continue;
          centers.push_back(c);
          placed = true;
        }
        if (!placed) throw Error("apply_perturbation: could not place a floater blob");
      }

      // Gaussian blobs, sigma one voxel, truncated at 2.5 voxels.
      for (const Vec3& c : centers) {
        const int reach = 3;
        const GridIndex base{
            static_cast<int>(std::floor((c.x - vol.bbox_min.x) / spacing.x)),
            static_cast<int>(std::floor((c.y - vol.bbox_min.y) / spacing.y)),
            static_cast<int>(std::floor((c.z - vol.bbox_min.z) / spacing.z))};
        for (int dz = -reach; dz <= reach + 1; ++dz) {
          for (int dy = -reach; dy <= reach + 1; ++dy) {
            for (int dx = -reach; dx <= reach + 1; ++dx) {
              const int sx = base.x + dx;
              const int sy = base.y + dy;
              const int sz = base.z + dz;
              if (sx < 0 || sx >= res.x || sy < 0 || sy >= res.y || sz < 0 || sz >= res.z) {
                continue;
              }
              const GridIndex idx{sx, sy, sz};
              const Vec3 d = vol.vertex_position(idx) - c;
              const double dist_vox = norm(d) / voxel;
              if (dist_vox > 2.5) continue;
              const double g = std::exp(-0.5 * dist_vox * dist_vox);
              const std::size_t li = linear_index(idx, res);
              out.values[li] =
                  std::max(out.values[li], static_cast<float>(amplitude * g));
            }
          }
        }
      }
      return out;
    }
  }
  throw Error("apply_perturbation: unknown perturbation kind");
}

enum class RigKind { kRing, kHemisphere };

struct RigOptions {
  int width = 200;
  int height = 200;
  // Narrow default so an object of radius ~0.35 at distance 1 overfills the
  // frame: every pixel ray then passes through the opaque interior.
  double fov_deg = 22.0;
};

namespace detail {

inline CameraModel aim_camera(const Vec3& origin, const Vec3& look_at, const RigOptions& opt,
                              int index) {
  CameraModel cam;
  cam.width = opt.width;
  cam.height = opt.height;
  const double half_fov = 0.5 * opt.fov_deg * std::numbers::pi / 180.0;
  cam.cx = 0.5 * (opt.width - 1);
  cam.cy = 0.5 * (opt.height - 1);
  cam.fx = cam.cx / std::tan(half_fov);
  cam.fy = cam.fx;
  cam.origin = origin;
  cam.id = "cam_" + std::to_string(index);

  const Vec3 forward = normalize(look_at - origin);
  Vec3 up{0.0, 0.0, 1.0};
  Vec3 x_axis = cross(forward, up);
  if (norm_sq(x_axis) < 1e-12) {
    up = {0.0, 1.0, 0.0};
    x_axis = cross(forward, up);
  }
  x_axis = normalize(x_axis);
  const Vec3 y_axis = cross(forward, x_axis);
  // Column-major axes packed into the row-major cam_to_world rotation.
  cam.rotation = {x_axis.x, y_axis.x, forward.x, x_axis.y, y_axis.y,
                  forward.y, x_axis.z, y_axis.z, forward.z};
  return cam;
}

}  // namespace detail

// Evenly distributed inward-looking cameras: a circle in the z-plane of
// look_at, or a Fibonacci-spaced upper hemisphere.
inline std::vector<CameraModel> camera_rig(RigKind kind, int count, double radius,
                                           const Vec3& look_at, const RigOptions& opt = {}) {
  if (count < 2) throw Error("camera_rig: need at least 2 cameras");
  if (!(radius > 0.0)) throw Error("camera_rig: radius must be positive");
  std::vector<CameraModel> cams;
  cams.reserve(static_cast<std::size_t>(count));
  if (kind == RigKind::kRing) {
    for (int i = 0; i < count; ++i) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) / count;
      const Vec3 origin =
          look_at + radius * Vec3{std::cos(theta), std::sin(theta), 0.0};
      cams.push_back(detail::aim_camera(origin, look_at, opt, i));
    }
  } else {
    constexpr double kGolden = 2.399963229728653;  // 2*pi*(1 - 1/phi)
    for (int i = 0; i < count; ++i) {
      const double z = (static_cast<double>(i) + 0.5) / count;  // upper hemisphere only
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = kGolden * static_cast<double>(i);
      const Vec3 dir{rho * std::cos(phi), rho * std::sin(phi), z};
      cams.push_back(detail::aim_camera(look_at + radius * dir, look_at, opt, i));
    }
  }
  return cams;
}

}  // namespace imrc
