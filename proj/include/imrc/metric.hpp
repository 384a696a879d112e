// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "imrc/camera.hpp"
#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"
#include "imrc/observation.hpp"
#include "imrc/parallel.hpp"
#include "imrc/sh.hpp"

namespace imrc {

// Inverse mean residual color in decibels. mrc = 0 maps to the +infinity
// sentinel (a field with literally zero residual everywhere).
inline double imrc_db(double mrc) {
  if (mrc < 0.0 || !std::isfinite(mrc)) throw Error("imrc_db: mrc must be finite and >= 0");
  if (mrc == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mrc);
}

enum class VoxelStatus : std::uint8_t {
  kEvaluated = 0,
  kSkippedLowAlpha = 1,
  kSkippedNoObservation = 2,
};

struct VoxelTerms {
  double numerator = 0.0;
  double denominator = 0.0;
  VoxelStatus status = VoxelStatus::kEvaluated;
};

// Residual weight at one grid vertex: fits the low-frequency color model to
// the vertex's observations and accumulates
//   numerator   = sum_k T_k * alpha_v * mean_square(residual_k)
//   denominator = sum_k T_k * alpha_v
// with alpha_v = 1 - exp(-sigma_v * delta_v), delta_v the mean half voxel
// edge. Vertices that cannot absorb (alpha below skip_alpha_eps) or that no
// camera sees contribute (0, 0) with the matching status.
inline VoxelTerms voxel_residual_terms(const DensityVolume& vol, const GridIndex& v,
                                       std::span<const CameraModel> cams, const EvalConfig& cfg) {
  VoxelTerms out;
  const Vec3 h = vol.spacing();
  const double delta_v = (h.x + h.y + h.z) / 6.0;  // mean of the per-axis half edges
  const double sigma_v = vol.value_at(v);
  const double alpha_v = -std::expm1(-sigma_v * delta_v);
  if (alpha_v <= cfg.skip_alpha_eps) {
    out.status = VoxelStatus::kSkippedLowAlpha;
    return out;
  }

  thread_local ObservationSet obs;
  gather_observations_into(obs, vol.vertex_position(v), cams, vol, cfg);
  if (obs.items.empty() || !(obs.sum_confidence > cfg.min_confidence)) {
    out.status = VoxelStatus::kSkippedNoObservation;
    return out;
  }

  const FitResult fit = fit_weighted_sequential(obs, cfg.sh_degree, cfg.min_confidence);
  for (std::size_t k = 0; k < obs.items.size(); ++k) {
    const double w = obs.items[k].confidence * alpha_v;
    out.numerator += w * mean_square(fit.residuals[k]);
    out.denominator += w;
  }
  return out;
}

// Per-vertex numerator/denominator pairs, same layout as the volume.
struct ResidualGrid {
  GridIndex resolution;
  std::vector<double> numerator;
  std::vector<double> denominator;

  double ratio(std::size_t i) const {
    return denominator[i] > 0.0 ? numerator[i] / denominator[i] : 0.0;
  }
};

// Aggregates a residual grid in fixed linear-index order; independent of how
// the grid was filled, so thread count never changes the result.
inline double mrc_from_grid(const ResidualGrid& grid) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < grid.numerator.size(); ++i) {
    num += grid.numerator[i];
    den += grid.denominator[i];
  }
  if (den == 0.0)
    throw DegenerateFieldError("mrc_from_grid: no vertex produced observation weight");
  return num / den;
}

struct MetricReport {
  double mrc = 0.0;
  double imrc_db = 0.0;
  int sh_degree = 0;
  GridIndex resolution;
  double ray_step = 0.0;
  std::uint64_t voxels_evaluated = 0;
  std::uint64_t voxels_skipped_low_alpha = 0;
  std::uint64_t voxels_skipped_no_observation = 0;

  bool imrc_is_finite() const { return std::isfinite(imrc_db); }
};

// Full metric over every grid vertex. Work is split across threads by vertex
// ranges; per-vertex results land in the grid and are reduced sequentially,
// so reports are bitwise identical for any thread count.
inline std::pair<MetricReport, ResidualGrid> compute_mrc(const DensityVolume& vol,
                                                         std::span<const CameraModel> cams,
                                                         const EvalConfig& cfg,
                                                         int n_threads = 0) {
  vol.validate();
  cfg.validate();
  if (cams.empty()) throw Error("compute_mrc: need at least one camera");

  EvalConfig rcfg = cfg;
  rcfg.ray_step = resolve_ray_step(cfg, vol);

  const std::size_t nv = vol.vertex_count();
  ResidualGrid grid{vol.resolution, std::vector<double>(nv, 0.0), std::vector<double>(nv, 0.0)};
  std::vector<std::uint8_t> status(nv, 0);

  parallel_for(nv, n_threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const VoxelTerms t = voxel_residual_terms(vol, delinearize(i, vol.resolution), cams, rcfg);
      grid.numerator[i] = t.numerator;
      grid.denominator[i] = t.denominator;
      status[i] = static_cast<std::uint8_t>(t.status);
    }
  });

  MetricReport report;
  report.sh_degree = rcfg.sh_degree;
  report.resolution = vol.resolution;
  report.ray_step = rcfg.ray_step;
  for (std::size_t i = 0; i < nv; ++i) {
    switch (static_cast<VoxelStatus>(status[i])) {
      case VoxelStatus::kEvaluated: ++report.voxels_evaluated; break;
      case VoxelStatus::kSkippedLowAlpha: ++report.voxels_skipped_low_alpha; break;
      case VoxelStatus::kSkippedNoObservation: ++report.voxels_skipped_no_observation; break;
    }
  }
  report.mrc = mrc_from_grid(grid);
  report.imrc_db = imrc_db(report.mrc);
  return {report, std::move(grid)};
}

// Expected ray termination depth per pixel: sum_i T_i * alpha_i * t_i along
// the pixel ray's bbox interval. Pixels whose weights sum below 1e-4 are
// background (NaN).
inline ScalarImage render_depth(const DensityVolume& vol, const CameraModel& cam, double step) {
  ScalarImage img(cam.width, cam.height);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const auto samples = march_ray(vol, cam.pixel_ray(u, v), step);
      double wsum = 0.0, dsum = 0.0;
      for (const RaySample& s : samples) {
        const double w = s.transmittance * s.alpha;
        wsum += w;
        dsum += w * s.t;
      }
      if (wsum >= 1e-4) img.at(u, v) = dsum;
    }
  }
  return img;
}

// Ray-accumulated residual ratio: sum_i T_i * alpha_i * rho(r(t_i)) with rho
// the trilinear interpolation of the per-vertex numerator/denominator ratio
// (zero where the denominator is zero). Highlights where residual weight
// concentrates; values are never clamped.
inline ScalarImage render_residual(const ResidualGrid& grid, const DensityVolume& vol,
                                   const CameraModel& cam, double step) {
  if (!(grid.resolution == vol.resolution))
    throw Error("render_residual: grid and volume resolution differ");
  DensityVolume ratio_vol;
  ratio_vol.resolution = vol.resolution;
  ratio_vol.bbox_min = vol.bbox_min;
  ratio_vol.bbox_max = vol.bbox_max;
  ratio_vol.values.resize(vol.vertex_count());
  for (std::size_t i = 0; i < ratio_vol.values.size(); ++i)
    ratio_vol.values[i] = static_cast<float>(grid.ratio(i));

  ScalarImage img(cam.width, cam.height);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Ray ray = cam.pixel_ray(u, v);
      const auto samples = march_ray(vol, ray, step);
      double acc = 0.0;
      bool hit = false;
      for (const RaySample& s : samples) {
        const double w = s.transmittance * s.alpha;
        if (w > 0.0) {
          acc += w * sample_density(ratio_vol, ray.origin + s.t * ray.dir);
          hit = true;
        }
      }
      if (hit) img.at(u, v) = acc;
    }
  }
  return img;
}

}  // namespace imrc
