// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"
#include "imrc/kdtree.hpp"
#include "imrc/marching_cubes.hpp"
#include "imrc/parallel.hpp"

namespace imrc {

struct PointCloud {
  std::vector<Vec3> points;
};

// Draws n points distributed proportionally to triangle area, uniform within
// each triangle (square-root barycentric warp). Identical seeds give
// identical clouds.
inline PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n,
                                      std::uint64_t seed) {
  if (mesh.triangles.empty()) throw Error("sample_mesh_surface: mesh has no triangles");
  if (n == 0) throw Error("sample_mesh_surface: sample count must be positive");

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const auto& t = mesh.triangles[i];
    const Vec3 a = mesh.vertices[t[0]];
    const Vec3 area_vec = cross(mesh.vertices[t[1]] - a, mesh.vertices[t[2]] - a);
    total += 0.5 * norm(area_vec);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error("sample_mesh_surface: mesh has zero total area");

  std::mt19937_64 rng(seed);
  PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform_double(rng) * total;
    const std::size_t ti = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const auto& t = mesh.triangles[std::min(ti, mesh.triangles.size() - 1)];
    const double r1 = std::sqrt(uniform_double(rng));
    const double r2 = uniform_double(rng);
    const Vec3 p = (1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                   r1 * r2 * mesh.vertices[t[2]];
    cloud.points.push_back(p);
  }
  return cloud;
}

namespace detail {

// Mean over a of the Euclidean distance to the nearest point of the indexed
// set. Distances land in a preallocated array so the reduction order is
// independent of the thread count.
inline double mean_nearest_distance(const std::vector<Vec3>& a, const KdTree& tree,
                                    int n_threads) {
  std::vector<double> dist(a.size());
  parallel_for(a.size(), n_threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) dist[i] = std::sqrt(tree.nearest(a[i]).dist_sq);
  });
  double sum = 0.0;
  for (double d : dist) sum += d;
  return sum / static_cast<double>(a.size());
}

}  // namespace detail

// Symmetric Chamfer distance: the average of the two directed mean
// nearest-neighbour distances, halved. L2 distances, exact neighbours.
inline double chamfer_distance(const PointCloud& a, const PointCloud& b, int n_threads = 1) {
  if (a.points.empty() || b.points.empty()) {
    throw Error("chamfer_distance: point clouds must be non-empty");
  }
  const KdTree tree_a(a.points);
  const KdTree tree_b(b.points);
  return 0.5 * (detail::mean_nearest_distance(a.points, tree_b, n_threads) +
                detail::mean_nearest_distance(b.points, tree_a, n_threads));
}

struct GoldenSectionResult {
  double argmin = 0.0;
  double min_value = 0.0;
  // Bracket [lo, hi] at termination; hi - lo <= tol.
  double final_lo = 0.0;
  double final_hi = 0.0;
  // Every (x, f(x)) probe in evaluation order.
  std::vector<std::pair<double, double>> evaluations;
};

// Golden-section minimization of a unimodal function on [lo, hi]. Probes stay
// strictly inside the bracket; iteration stops once |hi - lo| <= tol and the
// best evaluated point is returned. Non-finite f values abort the search.
template <typename F>
GoldenSectionResult golden_section_search(F&& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw Error("golden_section_search: requires lo < hi");
  if (!(tol > 0.0)) throw Error("golden_section_search: tolerance must be positive");

  constexpr double kInvPhi = 0.6180339887498949;    // 1/phi
  constexpr double kInvPhi2 = 0.3819660112501051;   // 1/phi^2

  GoldenSectionResult result;
  auto probe = [&](double x) {
    const double y = f(x);
    if (!std::isfinite(y)) {
      std::ostringstream msg;
      msg << "golden_section_search: objective returned non-finite value at x = " << x;
      throw SearchError(msg.str());
    }
    result.evaluations.emplace_back(x, y);
    return y;
  };

  double a = lo;
  double b = hi;
  double h = b - a;
  double c = a + kInvPhi2 * h;
  double d = a + kInvPhi * h;
  double yc = probe(c);
  double yd = probe(d);

  while (b - a > tol) {
    if (yc < yd) {
      b = d;
      d = c;
      yd = yc;
      h = b - a;
      c = a + kInvPhi2 * h;
      yc = probe(c);
    } else {
      a = c;
      c = d;
      yc = yd;
      h = b - a;
      d = a + kInvPhi * h;
      yd = probe(d);
    }
  }

  result.final_lo = a;
  result.final_hi = b;
  const auto best = std::min_element(
      result.evaluations.begin(), result.evaluations.end(),
      [](const auto& p, const auto& q) { return p.second < q.second; });
  result.argmin = best->first;
  result.min_value = best->second;
  return result;
}

struct CDSearchOptions {
  std::size_t n_samples = 100000;
  // Threshold bracket; values <= 0 default to 0.02 / 0.98 of the volume's
  // maximum density.
  double lo = 0.0;
  double hi = 0.0;
  double tol = 0.001;
  std::uint64_t seed = 0;
  int n_threads = 1;
};

struct CDSearchResult {
  double best_threshold = 0.0;
  double best_cd = 0.0;
  // Final golden-section bracket; width <= the requested tolerance.
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::vector<std::pair<double, double>> evaluations;
};

// Finds the marching-cubes threshold minimizing Chamfer distance against a
// ground-truth cloud. Thresholds that produce no surface score a large finite
// sentinel (10x the bbox diagonal) so the bracket contracts away from them; a
// search that never leaves the sentinel means no threshold in range yields a
// surface.
inline CDSearchResult best_cd(const DensityVolume& vol, const PointCloud& gt,
                              const CDSearchOptions& opt = {}) {
  vol.validate();
  if (gt.points.empty()) throw Error("best_cd: ground-truth cloud is empty");

  double lo = opt.lo;
  double hi = opt.hi;
  if (lo <= 0.0 || hi <= 0.0) {
    const float max_density = *std::max_element(vol.values.begin(), vol.values.end());
    if (!(max_density > 0.0f)) throw SearchError("best_cd: volume has no positive density");
    if (lo <= 0.0) lo = 0.02 * static_cast<double>(max_density);
    if (hi <= 0.0) hi = 0.98 * static_cast<double>(max_density);
  }

  const double sentinel = 10.0 * norm(vol.bbox_max - vol.bbox_min);
  const KdTree gt_tree(gt.points);

  auto objective = [&](double threshold) {
    const TriangleMesh mesh = marching_cubes(vol, threshold);
    if (mesh.triangles.empty()) return sentinel;
    const PointCloud pred = sample_mesh_surface(mesh, opt.n_samples, opt.seed);
    std::vector<double> dist(pred.points.size());
    parallel_for(pred.points.size(), opt.n_threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        dist[i] = std::sqrt(gt_tree.nearest(pred.points[i]).dist_sq);
      }
    });
    double sum = 0.0;
    for (double d : dist) sum += d;
    const double pred_to_gt = sum / static_cast<double>(pred.points.size());

    const KdTree pred_tree(pred.points);
    const double gt_to_pred = detail::mean_nearest_distance(gt.points, pred_tree, opt.n_threads);
    return 0.5 * (pred_to_gt + gt_to_pred);
  };

  const GoldenSectionResult search = golden_section_search(objective, lo, hi, opt.tol);
  if (search.min_value >= sentinel) {
    throw SearchError("best_cd: no threshold in range produced a surface");
  }

  CDSearchResult result;
  result.best_threshold = search.argmin;
  result.best_cd = search.min_value;
  result.bracket_lo = search.final_lo;
  result.bracket_hi = search.final_hi;
  result.evaluations = search.evaluations;
  return result;
}

}  // namespace imrc
