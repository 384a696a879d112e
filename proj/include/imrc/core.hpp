// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace imrc {

inline constexpr double kFourPi = 4.0 * std::numbers::pi;

// Optical depth beyond which transmittance is treated as exactly zero.
// exp(-60) ~ 8.8e-27, far below any confidence threshold in use. Clamping to
// zero (instead of exp(-tau) at the cutoff) keeps transmittance monotone
// under pointwise density increases.
inline constexpr double kMaxOpticalDepth = 60.0;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Index or position outside the structure it addresses.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// A direction could not be formed (zero or non-finite vector).
class DegenerateDirectionError : public Error {
 public:
  using Error::Error;
};

// A fit was requested with no usable observations.
class NoObservationError : public Error {
 public:
  using Error::Error;
};

// A field with no evaluable content (e.g. zero total weight).
class DegenerateFieldError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files.
class LoadError : public Error {
 public:
  using Error::Error;
};

// A parameter search failed (non-finite objective, empty sweep).
class SearchError : public Error {
 public:
  using Error::Error;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, const Vec3& v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(const Vec3& v, double s) { return s * v; }
inline Vec3 operator/(const Vec3& v, double s) { return {v.x / s, v.y / s, v.z / s}; }
inline Vec3& operator+=(Vec3& a, const Vec3& b) { a = a + b; return a; }

inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm_sq(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(norm_sq(v)); }

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

// Unit vector along v. Zero or non-finite input has no direction.
inline Vec3 normalize(const Vec3& v) {
  const double n = norm(v);
  if (n == 0.0 || !std::isfinite(n))
    throw DegenerateDirectionError("normalize: vector has no direction");
  return v / n;
}

struct Color {
  double r = 0.0, g = 0.0, b = 0.0;
};

inline Color operator+(const Color& a, const Color& b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
inline Color operator-(const Color& a, const Color& b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
inline Color operator*(double s, const Color& c) { return {s * c.r, s * c.g, s * c.b}; }
inline Color operator*(const Color& c, double s) { return s * c; }
inline Color& operator+=(Color& a, const Color& b) { a = a + b; return a; }
inline Color& operator-=(Color& a, const Color& b) { a = a - b; return a; }

// Mean of the squared channels; the per-observation residual magnitude.
inline double mean_square(const Color& c) {
  return (c.r * c.r + c.g * c.g + c.b * c.b) / 3.0;
}

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
};

struct GridIndex {
  int x = 0, y = 0, z = 0;
};

inline bool operator==(const GridIndex& a, const GridIndex& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z;
}

// Flat offset of a grid vertex, x fastest, then y, then z.
inline std::size_t linear_index(const GridIndex& idx, const GridIndex& res) {
  if (idx.x < 0 || idx.y < 0 || idx.z < 0 || idx.x >= res.x || idx.y >= res.y || idx.z >= res.z)
    throw BoundsError("linear_index: index outside grid");
  return static_cast<std::size_t>(idx.x) +
         static_cast<std::size_t>(res.x) *
             (static_cast<std::size_t>(idx.y) + static_cast<std::size_t>(res.y) * static_cast<std::size_t>(idx.z));
}

inline GridIndex delinearize(std::size_t i, const GridIndex& res) {
  const std::size_t nx = static_cast<std::size_t>(res.x);
  const std::size_t ny = static_cast<std::size_t>(res.y);
  return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
}

// Evaluation parameters shared by the metric pipeline.
struct EvalConfig {
  int sh_degree = 2;            // fit degree L, 0..4
  double ray_step = 0.0;        // quadrature step; <= 0 selects half the smallest voxel edge
  double skip_alpha_eps = 1e-7; // vertices with alpha below this are skipped
  double min_confidence = 1e-6; // threshold for counting observations and guarding weight sums

  void validate() const {
    if (sh_degree < 0 || sh_degree > 4)
      throw Error("EvalConfig: sh_degree must be in [0, 4]");
    if (skip_alpha_eps < 0.0 || !(min_confidence > 0.0))
      throw Error("EvalConfig: thresholds must be non-negative (min_confidence positive)");
    if (ray_step > 0.0 && !std::isfinite(ray_step))
      throw Error("EvalConfig: ray_step must be finite");
  }
};

// [0,1) double from the top 53 bits. std::uniform_real_distribution has an
// implementation-defined sequence; this mapping is reproducible everywhere
// because mt19937_64 itself is pinned by the standard.
inline double uniform_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform direction on the unit sphere.
inline Vec3 uniform_unit_dir(std::mt19937_64& rng) {
  const double z = 1.0 - 2.0 * uniform_double(rng);
  const double phi = 2.0 * std::numbers::pi * uniform_double(rng);
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace imrc
