// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "imrc/core.hpp"

namespace imrc {

// Row-major RGB image with channel values in [0, 1].
struct ImageBuffer {
  int width = 0, height = 0;
  std::vector<Color> pixels;

  ImageBuffer() = default;
  ImageBuffer(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}

  const Color& at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  Color& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

// Scalar image (depth, residual). Background pixels are NaN.
struct ScalarImage {
  int width = 0, height = 0;
  std::vector<double> values;

  ScalarImage() = default;
  ScalarImage(int w, int h)
      : width(w), height(h),
        values(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::quiet_NaN()) {}

  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }

  static bool is_background(double v) { return std::isnan(v); }
};

// Calibrated pinhole view: zero skew, camera looks along +z in camera space,
// pixel u grows right and v grows down. rotation is the cam_to_world rotation
// stored row-major; origin is the camera center in world space.
struct CameraModel {
  int width = 0, height = 0;
  double fx = 0.0, fy = 0.0, cx = 0.0, cy = 0.0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};
  Vec3 origin;
  ImageBuffer image;
  std::string id;

  Vec3 world_to_camera(const Vec3& p) const {
    const Vec3 d = p - origin;  // rotation is orthonormal, so inverse = transpose
    return {rotation[0] * d.x + rotation[3] * d.y + rotation[6] * d.z,
            rotation[1] * d.x + rotation[4] * d.y + rotation[7] * d.z,
            rotation[2] * d.x + rotation[5] * d.y + rotation[8] * d.z};
  }

  Vec3 camera_dir_to_world(const Vec3& d) const {
    return {rotation[0] * d.x + rotation[1] * d.y + rotation[2] * d.z,
            rotation[3] * d.x + rotation[4] * d.y + rotation[5] * d.z,
            rotation[6] * d.x + rotation[7] * d.y + rotation[8] * d.z};
  }

  // World ray through the center of pixel (u, v).
  Ray pixel_ray(double u, double v) const {
    const Vec3 dc = normalize(Vec3{(u - cx) / fx, (v - cy) / fy, 1.0});
    return Ray{origin, camera_dir_to_world(dc)};
  }
};

struct PixelCoord {
  double u = 0.0, v = 0.0;
};

// Continuous pixel coordinates of a world point, or nothing when the point is
// behind the camera (z <= 0) or lands outside [0, w-1] x [0, h-1].
inline std::optional<PixelCoord> project(const CameraModel& cam, const Vec3& p) {
  const Vec3 pc = cam.world_to_camera(p);
  if (!(pc.z > 0.0)) return std::nullopt;
  const double u = cam.fx * pc.x / pc.z + cam.cx;
  const double v = cam.fy * pc.y / pc.z + cam.cy;
  if (u < 0.0 || v < 0.0 || u > cam.width - 1.0 || v > cam.height - 1.0) return std::nullopt;
  return PixelCoord{u, v};
}

// Unit direction from point v toward the camera origin.
inline Vec3 view_direction(const Vec3& v, const Vec3& cam_origin) {
  return normalize(cam_origin - v);
}

// Bilinear sample at continuous coordinates; caller guarantees the
// coordinates are inside [0, w-1] x [0, h-1] (project() enforces this).
inline Color sample_bilinear(const ImageBuffer& img, double u, double v) {
  if (u < 0.0 || v < 0.0 || u > img.width - 1.0 || v > img.height - 1.0)
    throw BoundsError("sample_bilinear: coordinates outside image");
  int iu = std::min(static_cast<int>(u), img.width - 2);
  int iv = std::min(static_cast<int>(v), img.height - 2);
  if (img.width == 1) iu = 0;
  if (img.height == 1) iv = 0;
  const double fu = u - iu, fv = v - iv;
  const int u1 = std::min(iu + 1, img.width - 1);
  const int v1 = std::min(iv + 1, img.height - 1);
  const Color c00 = img.at(iu, iv), c10 = img.at(u1, iv);
  const Color c01 = img.at(iu, v1), c11 = img.at(u1, v1);
  const Color c0 = c00 + fu * (c10 - c00);
  const Color c1 = c01 + fu * (c11 - c01);
  return c0 + fv * (c1 - c0);
}

}  // namespace imrc
