// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "imrc/core.hpp"

namespace imrc {

// Density samples at voxel vertices: resolution counts vertices per axis, so
// an N^3 volume has (N-1)^3 cells. Values are stored x-fastest and must be
// non-negative and finite.
struct DensityVolume {
  GridIndex resolution;
  Vec3 bbox_min, bbox_max;
  std::vector<float> values;

  std::size_t vertex_count() const {
    return static_cast<std::size_t>(resolution.x) * static_cast<std::size_t>(resolution.y) *
           static_cast<std::size_t>(resolution.z);
  }

  Vec3 spacing() const {
    return {(bbox_max.x - bbox_min.x) / (resolution.x - 1),
            (bbox_max.y - bbox_min.y) / (resolution.y - 1),
            (bbox_max.z - bbox_min.z) / (resolution.z - 1)};
  }

  double min_voxel_edge() const {
    const Vec3 h = spacing();
    return std::min(h.x, std::min(h.y, h.z));
  }

  Vec3 vertex_position(const GridIndex& idx) const {
    const Vec3 h = spacing();
    return {bbox_min.x + idx.x * h.x, bbox_min.y + idx.y * h.y, bbox_min.z + idx.z * h.z};
  }

  double value_at(const GridIndex& idx) const { return values[linear_index(idx, resolution)]; }

  void validate() const {
    if (resolution.x < 2 || resolution.y < 2 || resolution.z < 2)
      throw Error("DensityVolume: need at least 2 vertices per axis");
    if (!(bbox_min.x < bbox_max.x) || !(bbox_min.y < bbox_max.y) || !(bbox_min.z < bbox_max.z))
      throw Error("DensityVolume: bbox_min must be strictly below bbox_max");
    if (values.size() != vertex_count())
      throw Error("DensityVolume: value count does not match resolution");
  }
};

inline DensityVolume make_volume(const GridIndex& resolution, const Vec3& bbox_min, const Vec3& bbox_max) {
  DensityVolume vol;
  vol.resolution = resolution;
  vol.bbox_min = bbox_min;
  vol.bbox_max = bbox_max;
  vol.values.assign(vol.vertex_count(), 0.0f);
  vol.validate();
  return vol;
}

// Trilinear interpolation of the vertex values; identically zero outside the
// bounding box (hard cutoff, no blending with exterior).
inline double sample_density(const DensityVolume& vol, const Vec3& p) {
  if (p.x < vol.bbox_min.x || p.y < vol.bbox_min.y || p.z < vol.bbox_min.z ||
      p.x > vol.bbox_max.x || p.y > vol.bbox_max.y || p.z > vol.bbox_max.z)
    return 0.0;
  const Vec3 h = vol.spacing();
  double gx = (p.x - vol.bbox_min.x) / h.x;
  double gy = (p.y - vol.bbox_min.y) / h.y;
  double gz = (p.z - vol.bbox_min.z) / h.z;
  int ix = std::min(static_cast<int>(gx), vol.resolution.x - 2);
  int iy = std::min(static_cast<int>(gy), vol.resolution.y - 2);
  int iz = std::min(static_cast<int>(gz), vol.resolution.z - 2);
  const double fx = gx - ix, fy = gy - iy, fz = gz - iz;

  const std::size_t nx = static_cast<std::size_t>(vol.resolution.x);
  const std::size_t nxy = nx * static_cast<std::size_t>(vol.resolution.y);
  const float* v = vol.values.data() + ix + nx * iy + nxy * iz;

  const double c00 = v[0] + fx * (v[1] - v[0]);
  const double c10 = v[nx] + fx * (v[nx + 1] - v[nx]);
  const double c01 = v[nxy] + fx * (v[nxy + 1] - v[nxy]);
  const double c11 = v[nxy + nx] + fx * (v[nxy + nx + 1] - v[nxy + nx]);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);
  return c0 + fz * (c1 - c0);
}

// Clips the ray origin + t*dir against the bbox; returns false on a miss.
// dir need not be unit length. Zero components handled by slab rejection.
inline bool intersect_bbox(const Vec3& bbox_min, const Vec3& bbox_max, const Vec3& origin,
                           const Vec3& dir, double& t0, double& t1) {
  t0 = -std::numeric_limits<double>::infinity();
  t1 = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double lo[3] = {bbox_min.x, bbox_min.y, bbox_min.z};
  const double hi[3] = {bbox_max.x, bbox_max.y, bbox_max.z};
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double ta = (lo[a] - o[a]) / d[a];
    double tb = (hi[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

// Resolved quadrature step: the configured one, or half the smallest voxel
// edge when the config leaves it unset.
inline double resolve_ray_step(const EvalConfig& cfg, const DensityVolume& vol) {
  return cfg.ray_step > 0.0 ? cfg.ray_step : 0.5 * vol.min_voxel_edge();
}

// Transmittance along the segment from point v to the camera origin o:
// exp of minus the optical depth, accumulated by midpoint sampling with the
// first sample half a step from v and the trailing partial interval taken at
// its true length. The segment is truncated where it leaves the bbox.
inline double transmittance_to_camera(const DensityVolume& vol, const Vec3& v, const Vec3& o,
                                      double step) {
  if (!(step > 0.0)) throw Error("transmittance_to_camera: step must be positive");
  const Vec3 diff = o - v;
  const double dist = norm(diff);
  if (dist == 0.0) return 1.0;
  const Vec3 dir = diff / dist;

  double t0, t1;
  if (!intersect_bbox(vol.bbox_min, vol.bbox_max, v, dir, t0, t1)) return 1.0;
  t0 = std::max(t0, 0.0);
  t1 = std::min(t1, dist);
  if (t1 <= t0) return 1.0;

  const double span = t1 - t0;
  const std::size_t n = static_cast<std::size_t>(span / step);
  double tau = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    tau += step * sample_density(vol, v + (t0 + (i + 0.5) * step) * dir);
    if (tau > kMaxOpticalDepth) return 0.0;
  }
  const double rem = span - static_cast<double>(n) * step;
  if (rem > 0.0) tau += rem * sample_density(vol, v + (t0 + n * step + 0.5 * rem) * dir);
  return tau > kMaxOpticalDepth ? 0.0 : std::exp(-tau);
}

// One quadrature sample along a ray. transmittance is the value *before*
// this sample absorbs, so weight = transmittance * alpha.
struct RaySample {
  double t = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  double alpha = 0.0;
  double transmittance = 1.0;
};

// Uniform sampling of the ray's bbox interval: samples at t_near, then every
// `step` up to t_far. The first sample carries delta = 0, so it never absorbs;
// each later sample absorbs over the interval behind it. An empty list means
// the ray misses the bbox.
inline std::vector<RaySample> march_ray(const DensityVolume& vol, const Ray& ray, double step) {
  if (!(step > 0.0)) throw Error("march_ray: step must be positive");
  std::vector<RaySample> samples;
  double t0, t1;
  if (!intersect_bbox(vol.bbox_min, vol.bbox_max, ray.origin, ray.dir, t0, t1)) return samples;
  t0 = std::max(t0, 0.0);
  if (t1 < t0) return samples;

  const std::size_t n = static_cast<std::size_t>((t1 - t0) / step);
  samples.reserve(n + 1);
  double tau = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    RaySample s;
    s.t = t0 + static_cast<double>(i) * step;
    s.delta = (i == 0) ? 0.0 : step;
    s.sigma = sample_density(vol, ray.origin + s.t * ray.dir);
    s.transmittance = std::exp(-tau);
    s.alpha = -std::expm1(-s.sigma * s.delta);
    tau += s.sigma * s.delta;
    samples.push_back(s);
  }
  return samples;
}

}  // namespace imrc
