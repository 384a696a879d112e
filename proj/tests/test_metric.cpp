// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "imrc/core.hpp"
#include "imrc/metric.hpp"
#include "imrc/synth.hpp"

namespace imrc {
namespace {

struct RenderedScene {
  DensityVolume vol;
  std::vector<CameraModel> cams;
};

RenderedScene textured_scene(int res, int n_cams, int img_size) {
  const AnalyticScene scene = make_textured_sphere_scene();
  RenderedScene out;
  out.vol = bake_volume(scene, {res, res, res});
  RigOptions opt;
  opt.width = img_size;
  opt.height = img_size;
  out.cams = camera_rig(RigKind::kRing, n_cams, 1.0, {0.5, 0.5, 0.5}, opt);
  const auto images = render_views(scene, out.cams, 1.0 / 256.0);
  for (std::size_t k = 0; k < out.cams.size(); ++k) out.cams[k].image = images[k];
  return out;
}

TEST(ImrcDb, KnownValues) {
  EXPECT_NEAR(imrc_db(0.01), 20.0, 1e-12);
  EXPECT_DOUBLE_EQ(imrc_db(1.0), 0.0);
  EXPECT_NEAR(imrc_db(std::pow(10.0, -1.564)), 15.64, 1e-12);
  EXPECT_NEAR(imrc_db(0.1), 10.0, 1e-12);
}

TEST(ImrcDb, ZeroResidualIsInfinite) {
  const double v = imrc_db(0.0);
  EXPECT_TRUE(std::isinf(v));
  EXPECT_GT(v, 0.0);
}

TEST(ImrcDb, RejectsInvalidInput) {
  EXPECT_THROW(imrc_db(-0.5), Error);
  EXPECT_THROW(imrc_db(std::numeric_limits<double>::quiet_NaN()), Error);
  EXPECT_THROW(imrc_db(std::numeric_limits<double>::infinity()), Error);
}

TEST(MrcFromGrid, RatioOfSums) {
  ResidualGrid grid;
  grid.resolution = {2, 1, 1};
  grid.numerator = {0.02, 0.0};
  grid.denominator = {2.0, 0.0};
  EXPECT_DOUBLE_EQ(mrc_from_grid(grid), 0.01);
}

TEST(MrcFromGrid, NoWeightThrows) {
  ResidualGrid grid;
  grid.resolution = {2, 1, 1};
  grid.numerator = {0.0, 0.0};
  grid.denominator = {0.0, 0.0};
  EXPECT_THROW(mrc_from_grid(grid), DegenerateFieldError);
}

TEST(VoxelTerms, ZeroDensityVertexIsSkipped) {
  const DensityVolume vol = make_volume({16, 16, 16}, {0, 0, 0}, {1, 1, 1});
  auto cams = camera_rig(RigKind::kRing, 4, 1.0, {0.5, 0.5, 0.5});
  for (auto& cam : cams) cam.image = ImageBuffer(cam.width, cam.height);
  EvalConfig cfg;
  cfg.ray_step = 0.05;
  const VoxelTerms t = voxel_residual_terms(vol, {8, 8, 8}, cams, cfg);
  EXPECT_EQ(t.status, VoxelStatus::kSkippedLowAlpha);
  EXPECT_DOUBLE_EQ(t.numerator, 0.0);
  EXPECT_DOUBLE_EQ(t.denominator, 0.0);
}

TEST(VoxelTerms, UnseenVertexIsSkipped) {
  DensityVolume vol = make_volume({16, 16, 16}, {0, 0, 0}, {1, 1, 1});
  vol.values[linear_index({8, 8, 8}, vol.resolution)] = 100.0f;
  // One camera above the volume looking further up: the volume is behind it.
  CameraModel cam;
  cam.width = cam.height = 32;
  cam.fx = cam.fy = 30.0;
  cam.cx = cam.cy = 15.5;
  cam.origin = {0.5, 0.5, 2.0};
  cam.image = ImageBuffer(32, 32);
  EvalConfig cfg;
  cfg.ray_step = 0.05;
  const VoxelTerms t = voxel_residual_terms(vol, {8, 8, 8}, std::vector<CameraModel>{cam}, cfg);
  EXPECT_EQ(t.status, VoxelStatus::kSkippedNoObservation);
  EXPECT_DOUBLE_EQ(t.denominator, 0.0);
}

TEST(VoxelTerms, ConstantSceneResidualsNearZeroEverywhere) {
  // Every observation of a constant-color opaque sphere reports the same
  // color, so each evaluated vertex fits its observations exactly. Interior
  // vertices are skipped (no camera retains confidence through the shell) and
  // empty-space vertices are skipped on alpha; neither may leak a residual.
  const AnalyticScene scene = make_constant_sphere_scene();
  const DensityVolume vol = bake_volume(scene, {32, 32, 32});
  RigOptions opt;
  opt.width = opt.height = 100;
  auto cams = camera_rig(RigKind::kRing, 12, 1.0, {0.5, 0.5, 0.5}, opt);
  const auto images = render_views(scene, cams, 1.0 / 256.0);
  for (std::size_t k = 0; k < cams.size(); ++k) cams[k].image = images[k];

  const EvalConfig cfg;
  std::size_t evaluated = 0;
  double max_ratio = 0.0;
  for (int z = 0; z < 32; ++z) {
    for (int y = 0; y < 32; ++y) {
      for (int x = 0; x < 32; ++x) {
        const VoxelTerms t = voxel_residual_terms(vol, {x, y, z}, cams, cfg);
        if (t.status != VoxelStatus::kEvaluated) continue;
        ASSERT_GT(t.denominator, 0.0);
        ++evaluated;
        max_ratio = std::max(max_ratio, t.numerator / t.denominator);
      }
    }
  }
  EXPECT_GE(evaluated, 200u);
  EXPECT_LT(max_ratio, 1e-12);
}

TEST(VoxelTerms, DisplacedSurfaceVertexHasLargerResidual) {
  // On a two-tone sphere, a surface vertex next to the tone boundary is seen
  // by the camera on its azimuth and by the two neighbors 15 degrees away.
  // For the true surface all three rays strike the surface at the vertex and
  // agree. A vertex pushed two voxels outward sits in front of the surface:
  // parallax lands the neighbor rays on opposite sides of the tone boundary,
  // the observations disagree, and the residual ratio jumps by many orders.
  const AnalyticScene scene = make_textured_sphere_scene();
  const DensityVolume gt = bake_volume(scene, {64, 64, 64});
  const DensityVolume dilated = apply_perturbation(gt, {PerturbKind::kDilate, 2.0, 0});
  RigOptions opt;
  opt.width = opt.height = 100;
  auto cams = camera_rig(RigKind::kRing, 24, 1.0, {0.5, 0.5, 0.5}, opt);
  const auto images = render_views(scene, cams, 1.0 / 256.0);
  for (std::size_t k = 0; k < cams.size(); ++k) cams[k].image = images[k];

  const EvalConfig cfg;
  // Near the +x pole, one row below the tone boundary plane y = 0.5:
  // {54,31,31} is on the true shell (x = 54/63, r ~ 0.357); {56,31,31} is the
  // outermost vertex the two-voxel dilation still covers (r ~ 0.389).
  const GridIndex on_surface{54, 31, 31};
  const GridIndex displaced{56, 31, 31};
  const VoxelTerms t_gt = voxel_residual_terms(gt, on_surface, cams, cfg);
  const VoxelTerms t_dil = voxel_residual_terms(dilated, displaced, cams, cfg);
  ASSERT_EQ(t_gt.status, VoxelStatus::kEvaluated);
  ASSERT_EQ(t_dil.status, VoxelStatus::kEvaluated);
  const double ratio_gt = t_gt.numerator / t_gt.denominator;
  const double ratio_dil = t_dil.numerator / t_dil.denominator;
  EXPECT_LT(ratio_gt, 1e-9);
  EXPECT_GT(ratio_dil, 1e-3);
}

TEST(ComputeMrc, ConstantSceneScoresHigh) {
  const AnalyticScene scene = make_constant_sphere_scene();
  const DensityVolume vol = bake_volume(scene, {32, 32, 32});
  RigOptions opt;
  opt.width = opt.height = 100;
  auto cams = camera_rig(RigKind::kRing, 12, 1.0, {0.5, 0.5, 0.5}, opt);
  const auto images = render_views(scene, cams, 1.0 / 256.0);
  for (std::size_t k = 0; k < cams.size(); ++k) cams[k].image = images[k];

  const auto [report, grid] = compute_mrc(vol, cams, EvalConfig{});
  EXPECT_GT(report.imrc_db, 40.0);
  EXPECT_GT(report.voxels_evaluated, 0u);
  EXPECT_EQ(report.voxels_evaluated + report.voxels_skipped_low_alpha +
                report.voxels_skipped_no_observation,
            vol.vertex_count());
  EXPECT_EQ(report.sh_degree, 2);
  EXPECT_DOUBLE_EQ(report.ray_step, resolve_ray_step(EvalConfig{}, vol));
}

TEST(ComputeMrc, ThreadCountDoesNotChangeTheReport) {
  const RenderedScene rs = textured_scene(24, 8, 64);
  const auto [r1, g1] = compute_mrc(rs.vol, rs.cams, EvalConfig{}, 1);
  const auto [r4, g4] = compute_mrc(rs.vol, rs.cams, EvalConfig{}, 4);
  EXPECT_EQ(std::memcmp(&r1.mrc, &r4.mrc, sizeof(double)), 0);
  EXPECT_EQ(r1.voxels_evaluated, r4.voxels_evaluated);
  EXPECT_EQ(r1.voxels_skipped_low_alpha, r4.voxels_skipped_low_alpha);
  EXPECT_EQ(r1.voxels_skipped_no_observation, r4.voxels_skipped_no_observation);
  ASSERT_EQ(g1.numerator.size(), g4.numerator.size());
  EXPECT_EQ(std::memcmp(g1.numerator.data(), g4.numerator.data(),
                        g1.numerator.size() * sizeof(double)),
            0);
  EXPECT_EQ(std::memcmp(g1.denominator.data(), g4.denominator.data(),
                        g1.denominator.size() * sizeof(double)),
            0);
}

TEST(ComputeMrc, BlindCameraIsANoOp) {
  const RenderedScene rs = textured_scene(24, 8, 64);
  const auto [base, bg] = compute_mrc(rs.vol, rs.cams, EvalConfig{});

  auto cams = rs.cams;
  CameraModel blind;
  blind.width = blind.height = 16;
  blind.fx = blind.fy = 15.0;
  blind.cx = blind.cy = 7.5;
  blind.origin = {0.5, 0.5, 50.0};  // looking along +z, away from the volume
  blind.image = ImageBuffer(16, 16);
  cams.push_back(blind);
  const auto [with_blind, wg] = compute_mrc(rs.vol, cams, EvalConfig{});

  EXPECT_EQ(std::memcmp(&base.mrc, &with_blind.mrc, sizeof(double)), 0);
  EXPECT_EQ(base.voxels_evaluated, with_blind.voxels_evaluated);
  EXPECT_EQ(base.voxels_skipped_no_observation, with_blind.voxels_skipped_no_observation);
}

TEST(ComputeMrc, InvariantUnderPowerOfTwoWorldRescale) {
  // Doubling the world (bbox, camera centers, step) while halving densities
  // preserves every optical depth; with a power-of-two factor the arithmetic
  // is bit-identical.
  const RenderedScene rs = textured_scene(24, 8, 64);
  const auto [base, bg] = compute_mrc(rs.vol, rs.cams, EvalConfig{});

  DensityVolume scaled = rs.vol;
  scaled.bbox_min = 2.0 * scaled.bbox_min;
  scaled.bbox_max = 2.0 * scaled.bbox_max;
  for (float& v : scaled.values) v *= 0.5f;
  auto cams = rs.cams;
  for (CameraModel& cam : cams) cam.origin = 2.0 * cam.origin;

  const auto [rescaled, rg] = compute_mrc(scaled, cams, EvalConfig{});
  EXPECT_DOUBLE_EQ(base.mrc, rescaled.mrc);
  EXPECT_EQ(base.voxels_evaluated, rescaled.voxels_evaluated);
}

TEST(ComputeMrc, EmptyVolumeThrows) {
  const DensityVolume vol = make_volume({16, 16, 16}, {0, 0, 0}, {1, 1, 1});
  auto cams = camera_rig(RigKind::kRing, 4, 1.0, {0.5, 0.5, 0.5});
  for (auto& cam : cams) cam.image = ImageBuffer(cam.width, cam.height);
  EXPECT_THROW(compute_mrc(vol, cams, EvalConfig{}), DegenerateFieldError);
  EXPECT_THROW(compute_mrc(vol, std::vector<CameraModel>{}, EvalConfig{}), Error);
}

TEST(RenderDepth, SlabDepthAndBackground) {
  // Opaque slab z in [0.2, 0.5]; camera 1 below the box looking up.
  DensityVolume vol = make_volume({32, 32, 32}, {0, 0, 0}, {1, 1, 1});
  for (int z = 0; z < 32; ++z) {
    const double pz = z / 31.0;
    if (pz < 0.2 || pz > 0.5) continue;
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x)
        vol.values[linear_index({x, y, z}, vol.resolution)] = 500.0f;
  }
  CameraModel cam;
  cam.width = cam.height = 33;
  cam.fx = cam.fy = 60.0;
  cam.cx = cam.cy = 16.0;
  cam.origin = {0.5, 0.5, -1.0};
  const double step = 0.01;
  const ScalarImage depth = render_depth(vol, cam, step);

  const double center = depth.at(16, 16);
  ASSERT_FALSE(ScalarImage::is_background(center));
  // Expected: entry at z = 0.2 plus a fraction of the ramp cell; 1.5 voxels
  // plus quadrature slack.
  EXPECT_NEAR(center, 1.2, 1.5 / 31.0 + 2.0 * step);

  // Wide-angle corner pixels miss the box entirely.
  CameraModel wide = cam;
  wide.fx = wide.fy = 10.0;
  const ScalarImage sparse = render_depth(vol, wide, step);
  EXPECT_TRUE(ScalarImage::is_background(sparse.at(0, 0)));
}

TEST(RenderDepth, FartherSlabReadsDeeper) {
  auto slab_at = [](double lo, double hi) {
    DensityVolume vol = make_volume({32, 32, 32}, {0, 0, 0}, {1, 1, 1});
    for (int z = 0; z < 32; ++z) {
      const double pz = z / 31.0;
      if (pz < lo || pz > hi) continue;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          vol.values[linear_index({x, y, z}, vol.resolution)] = 500.0f;
    }
    return vol;
  };
  CameraModel cam;
  cam.width = cam.height = 9;
  cam.fx = cam.fy = 30.0;
  cam.cx = cam.cy = 4.0;
  cam.origin = {0.5, 0.5, -1.0};
  const ScalarImage near = render_depth(slab_at(0.2, 0.5), cam, 0.01);
  const ScalarImage far = render_depth(slab_at(0.5, 0.8), cam, 0.01);
  EXPECT_NEAR(far.at(4, 4) - near.at(4, 4), 0.3, 0.05);
}

TEST(RenderResidual, NonNegativeAndHighlightsFloater) {
  // A wide field of view keeps the off-axis blob inside several frames, so at
  // least one residual render shows it as a hot spot against the surface.
  const AnalyticScene scene = make_textured_sphere_scene();
  const DensityVolume gt = bake_volume(scene, {32, 32, 32});
  const DensityVolume pert = apply_perturbation(gt, {PerturbKind::kFloaters, 1.0, 7});
  RigOptions opt;
  opt.width = opt.height = 120;
  opt.fov_deg = 55.0;
  auto cams = camera_rig(RigKind::kRing, 12, 1.0, {0.5, 0.5, 0.5}, opt);
  const auto images = render_views(scene, cams, 1.0 / 256.0);
  for (std::size_t k = 0; k < cams.size(); ++k) cams[k].image = images[k];

  const auto [report, grid] = compute_mrc(pert, cams, EvalConfig{});

  // Locate the blob: the vertex with the largest density increase.
  std::size_t blob_index = 0;
  float best = -1.0f;
  for (std::size_t i = 0; i < pert.values.size(); ++i) {
    const float d = pert.values[i] - gt.values[i];
    if (d > best) {
      best = d;
      blob_index = i;
    }
  }
  ASSERT_GT(best, 0.0f);
  const Vec3 blob = pert.vertex_position(delinearize(blob_index, pert.resolution));

  const double step = resolve_ray_step(EvalConfig{}, pert);
  double best_peak = 0.0;
  for (const CameraModel& cam : cams) {
    const auto px = project(cam, blob);
    if (!px) continue;
    const ScalarImage img = render_residual(grid, pert, cam, step);
    double mean = 0.0;
    std::size_t n = 0;
    for (double v : img.values) {
      ASSERT_FALSE(v < 0.0);  // never negative where defined
      if (!ScalarImage::is_background(v)) {
        mean += v;
        ++n;
      }
    }
    ASSERT_GT(n, 0u);
    mean /= static_cast<double>(n);
    const double at_blob = img.at(static_cast<int>(std::lround(px->u)),
                                  static_cast<int>(std::lround(px->v)));
    if (!ScalarImage::is_background(at_blob) && mean > 0.0)
      best_peak = std::max(best_peak, at_blob / mean);
  }
  // In at least one view the blob pixel carries several times the mean
  // residual signal.
  EXPECT_GT(best_peak, 3.0);
}

TEST(RenderResidual, MismatchedGridThrows) {
  const DensityVolume vol = make_volume({16, 16, 16}, {0, 0, 0}, {1, 1, 1});
  ResidualGrid grid;
  grid.resolution = {8, 8, 8};
  grid.numerator.assign(512, 0.0);
  grid.denominator.assign(512, 0.0);
  CameraModel cam;
  cam.width = cam.height = 8;
  cam.fx = cam.fy = 8.0;
  cam.cx = cam.cy = 3.5;
  cam.origin = {0.5, 0.5, -1.0};
  EXPECT_THROW(render_residual(grid, vol, cam, 0.05), Error);
}

}  // namespace
}  // namespace imrc
