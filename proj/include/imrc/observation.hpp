// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "imrc/camera.hpp"
#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"

namespace imrc {

// One calibrated view of a world point: the bilinear image color at its
// projection, the unit direction from the point toward the camera, and the
// transmittance between them (how unoccluded the view is).
struct Observation {
  Color color;
  Vec3 direction;
  double confidence = 0.0;
  int camera_index = -1;
};

struct ObservationSet {
  std::vector<Observation> items;
  double sum_confidence = 0.0;
};

// Collects observations of point v from every camera whose projection of v is
// valid, in camera order. Cameras that do not see the point contribute
// nothing, which is equivalent to a zero-confidence observation everywhere
// downstream (all uses weight by confidence).
inline void gather_observations_into(ObservationSet& out, const Vec3& v,
                                     std::span<const CameraModel> cams, const DensityVolume& vol,
                                     const EvalConfig& cfg) {
  out.items.clear();
  out.sum_confidence = 0.0;
  const double step = resolve_ray_step(cfg, vol);
  for (std::size_t k = 0; k < cams.size(); ++k) {
    const CameraModel& cam = cams[k];
    const auto px = project(cam, v);
    if (!px) continue;
    Observation ob;
    ob.color = sample_bilinear(cam.image, px->u, px->v);
    ob.direction = view_direction(v, cam.origin);
    ob.confidence = transmittance_to_camera(vol, v, cam.origin, step);
    ob.camera_index = static_cast<int>(k);
    out.sum_confidence += ob.confidence;
    out.items.push_back(ob);
  }
}

inline ObservationSet gather_observations(const Vec3& v, std::span<const CameraModel> cams,
                                          const DensityVolume& vol, const EvalConfig& cfg) {
  ObservationSet out;
  gather_observations_into(out, v, cams, vol, cfg);
  return out;
}

}  // namespace imrc
