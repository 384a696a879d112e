// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "imrc/bench.hpp"
#include "imrc/chamfer.hpp"
#include "imrc/core.hpp"
#include "imrc/io.hpp"
#include "imrc/metric.hpp"
#include "imrc/parallel.hpp"
#include "imrc/synth.hpp"

namespace imrc {

namespace detail {

// --threads wins; otherwise the IMRC_THREADS environment variable; otherwise
// the hardware count.
inline int resolve_threads_flag(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("IMRC_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return resolve_thread_count(0);
}

inline void emit_or_print(const std::string& content, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << content;
  } else {
    write_text_file(content, out_path);
  }
}

inline AnalyticScene scene_by_name(const std::string& name) {
  if (name == "constant-sphere") return make_constant_sphere_scene();
  if (name == "textured-sphere") return make_textured_sphere_scene();
  if (name == "textured-cube") return make_textured_cube_scene();
  if (name == "glossy-sphere") return make_glossy_sphere_scene();
  throw Error("unknown scene '" + name +
              "' (expected constant-sphere, textured-sphere, textured-cube, glossy-sphere)");
}

inline void add_imrc_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("imrc", "Evaluate a density volume against calibrated images");
  auto volume = std::make_shared<std::string>();
  auto cameras = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto residuals = std::make_shared<std::string>();
  auto render_dir = std::make_shared<std::string>();
  auto sh_degree = std::make_shared<int>(2);
  auto ray_step = std::make_shared<double>(0.0);
  auto threads = std::make_shared<int>(0);
  cmd->add_option("--volume", *volume, "Volume header JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--cameras", *cameras, "Camera bundle JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--sh-degree", *sh_degree, "SH degree for the color fit")
      ->check(CLI::Range(0, kMaxShDegree));
  cmd->add_option("--ray-step", *ray_step, "Ray march step (0 = half min voxel edge)");
  cmd->add_option("--threads", *threads, "Worker threads (0 = IMRC_THREADS or hardware)");
  cmd->add_option("--out", *out, "Report JSON path (stdout when omitted)");
  cmd->add_option("--residuals", *residuals, "Also save the residual grid as a volume here");
  cmd->add_option("--render-dir", *render_dir, "Also write per-camera diagnostic images here");

  cmd->callback([=]() {
    const DensityVolume vol = load_volume(*volume);
    const std::vector<CameraModel> cams = load_cameras(*cameras);
    EvalConfig cfg;
    cfg.sh_degree = *sh_degree;
    cfg.ray_step = *ray_step;
    const int n_threads = resolve_threads_flag(*threads);
    const auto [report, grid] = compute_mrc(vol, cams, cfg, n_threads);
    emit_or_print(metric_report_json(report), *out);

    if (!residuals->empty()) {
      DensityVolume ratio = make_volume(vol.resolution, vol.bbox_min, vol.bbox_max);
      for (std::size_t i = 0; i < ratio.values.size(); ++i) {
        ratio.values[i] = static_cast<float>(grid.ratio(i));
      }
      save_volume(ratio, *residuals);
    }
    if (!render_dir->empty()) {
      std::filesystem::create_directories(*render_dir);
      const double step = report.ray_step;
      for (const CameraModel& cam : cams) {
        const ScalarImage depth = render_depth(vol, cam, step);
        const ScalarImage resid = render_residual(grid, vol, cam, step);
        double dmin = 0.0, dmax = 0.0, rmax = 0.0;
        bool any = false;
        for (double v : depth.values) {
          if (ScalarImage::is_background(v)) continue;
          if (!any) {
            dmin = dmax = v;
            any = true;
          } else {
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
          }
        }
        for (double v : resid.values) {
          if (!ScalarImage::is_background(v)) rmax = std::max(rmax, v);
        }
        const std::filesystem::path dir(*render_dir);
        write_png_gray(depth, any ? dmin : 0.0, any && dmax > dmin ? dmax : 1.0,
                       dir / ("depth_" + cam.id + ".png"));
        write_png_gray(resid, 0.0, rmax > 0.0 ? rmax : 1.0,
                       dir / ("residual_" + cam.id + ".png"));
      }
    }
  });
}

inline void add_chamfer_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("chamfer", "Threshold search minimizing Chamfer distance");
  auto volume = std::make_shared<std::string>();
  auto gt = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto tol = std::make_shared<double>(0.001);
  auto samples = std::make_shared<std::size_t>(100000);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto lo = std::make_shared<double>(0.0);
  auto hi = std::make_shared<double>(0.0);
  auto threads = std::make_shared<int>(0);
  cmd->add_option("--volume", *volume, "Volume header JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--gt", *gt, "Ground-truth point cloud PLY")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--tol", *tol, "Golden-section bracket tolerance");
  cmd->add_option("--samples", *samples, "Points sampled on each candidate mesh");
  cmd->add_option("--seed", *seed, "Mesh sampling seed");
  cmd->add_option("--lo", *lo, "Threshold bracket low end (0 = 2% of max density)");
  cmd->add_option("--hi", *hi, "Threshold bracket high end (0 = 98% of max density)");
  cmd->add_option("--threads", *threads, "Worker threads (0 = IMRC_THREADS or hardware)");
  cmd->add_option("--out", *out, "Result JSON path (stdout when omitted)");

  cmd->callback([=]() {
    const DensityVolume vol = load_volume(*volume);
    const PointCloud cloud = read_ply_points(*gt);
    CDSearchOptions opt;
    opt.n_samples = *samples;
    opt.lo = *lo;
    opt.hi = *hi;
    opt.tol = *tol;
    opt.seed = *seed;
    opt.n_threads = resolve_threads_flag(*threads);
    const CDSearchResult result = best_cd(vol, cloud, opt);
    emit_or_print(cd_result_json(result), *out);
  });
}

inline void add_mc_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("mc", "Extract an isosurface mesh");
  auto volume = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto threshold = std::make_shared<double>();
  auto binary = std::make_shared<bool>(false);
  cmd->add_option("--volume", *volume, "Volume header JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--threshold", *threshold, "Density threshold")->required();
  cmd->add_option("--out", *out, "Output PLY path")->required();
  cmd->add_flag("--binary", *binary, "Write binary little-endian PLY instead of ascii");

  cmd->callback([=]() {
    const DensityVolume vol = load_volume(*volume);
    const TriangleMesh mesh = marching_cubes(vol, *threshold);
    write_ply_mesh(mesh, *out, *binary);
  });
}

inline void add_render_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("render", "Render depth or residual diagnostics");
  auto volume = std::make_shared<std::string>();
  auto cameras = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto mode = std::make_shared<std::string>();
  auto sh_degree = std::make_shared<int>(2);
  auto ray_step = std::make_shared<double>(0.0);
  auto threads = std::make_shared<int>(0);
  cmd->add_option("--volume", *volume, "Volume header JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--cameras", *cameras, "Camera bundle JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--mode", *mode, "depth or residual")
      ->required()
      ->check(CLI::IsMember({"depth", "residual"}));
  cmd->add_option("--sh-degree", *sh_degree, "SH degree (residual mode)")
      ->check(CLI::Range(0, kMaxShDegree));
  cmd->add_option("--ray-step", *ray_step, "Ray march step (0 = half min voxel edge)");
  cmd->add_option("--threads", *threads, "Worker threads (0 = IMRC_THREADS or hardware)");
  cmd->add_option("--out", *out, "Output directory")->required();

  cmd->callback([=]() {
    const DensityVolume vol = load_volume(*volume);
    const std::vector<CameraModel> cams = load_cameras(*cameras);
    std::filesystem::create_directories(*out);
    const std::filesystem::path dir(*out);

    EvalConfig cfg;
    cfg.sh_degree = *sh_degree;
    cfg.ray_step = *ray_step;
    const double step = resolve_ray_step(cfg, vol);

    if (*mode == "depth") {
      for (const CameraModel& cam : cams) {
        const ScalarImage depth = render_depth(vol, cam, step);
        double dmin = 0.0, dmax = 0.0;
        bool any = false;
        for (double v : depth.values) {
          if (ScalarImage::is_background(v)) continue;
          if (!any) {
            dmin = dmax = v;
            any = true;
          } else {
            dmin = std::min(dmin, v);
            dmax = std::max(dmax, v);
          }
        }
        write_png_gray(depth, any ? dmin : 0.0, any && dmax > dmin ? dmax : 1.0,
                       dir / ("depth_" + cam.id + ".png"));
      }
    } else {
      const int n_threads = resolve_threads_flag(*threads);
      const auto [report, grid] = compute_mrc(vol, cams, cfg, n_threads);
      for (const CameraModel& cam : cams) {
        const ScalarImage resid = render_residual(grid, vol, cam, step);
        double rmax = 0.0;
        for (double v : resid.values) {
          if (!ScalarImage::is_background(v)) rmax = std::max(rmax, v);
        }
        write_png_gray(resid, 0.0, rmax > 0.0 ? rmax : 1.0,
                       dir / ("residual_" + cam.id + ".png"));
      }
    }
  });
}

inline void add_synth_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("synth", "Generate a synthetic scene dataset");
  auto scene_name = std::make_shared<std::string>();
  auto out = std::make_shared<std::string>();
  auto rig = std::make_shared<std::string>("ring");
  auto resolution = std::make_shared<int>(96);
  auto n_cameras = std::make_shared<int>(24);
  auto seed = std::make_shared<std::uint64_t>(0);
  auto render_step = std::make_shared<double>(1.0 / 256.0);
  auto gt_samples = std::make_shared<std::size_t>(100000);
  auto no_variants = std::make_shared<bool>(false);
  cmd->add_option("--scene", *scene_name,
                  "constant-sphere, textured-sphere, textured-cube, or glossy-sphere")
      ->required();
  cmd->add_option("--resolution", *resolution, "Baked volume vertices per axis")
      ->check(CLI::Range(16, 1024));
  cmd->add_option("--cameras", *n_cameras, "Number of cameras")->check(CLI::Range(2, 4096));
  cmd->add_option("--rig", *rig, "Camera rig kind")->check(CLI::IsMember({"ring", "hemisphere"}));
  cmd->add_option("--seed", *seed, "Seed for surface sampling and floater placement");
  cmd->add_option("--render-step", *render_step, "Quadrature step for rendering");
  cmd->add_option("--gt-samples", *gt_samples, "Ground-truth surface points to sample");
  cmd->add_flag("--no-variants", *no_variants, "Skip the perturbed volume variants");
  cmd->add_option("--out", *out, "Output directory")->required();

  cmd->callback([=]() {
    const AnalyticScene scene = scene_by_name(*scene_name);
    std::filesystem::create_directories(*out);
    const std::filesystem::path dir(*out);

    const Vec3 center = 0.5 * (scene.bbox_min + scene.bbox_max);
    const RigKind kind = *rig == "ring" ? RigKind::kRing : RigKind::kHemisphere;
    std::vector<CameraModel> cams = camera_rig(kind, *n_cameras, 1.0, center);
    const std::vector<ImageBuffer> images = render_views(scene, cams, *render_step);
    for (std::size_t i = 0; i < cams.size(); ++i) cams[i].image = images[i];
    save_cameras(cams, dir / "cameras.json");

    const DensityVolume vol = bake_volume(scene, {*resolution, *resolution, *resolution});
    save_volume(vol, dir / "volume.json");

    if (scene.sample_surface) {
      const PointCloud cloud = sample_scene_surface(scene, *gt_samples, *seed);
      write_ply_points(cloud, dir / "gt_points.ply", true);
    }

    if (!*no_variants) {
      save_volume(apply_perturbation(vol, {PerturbKind::kDilate, 2.0, *seed}),
                  dir / "volume_dilate2.json");
      save_volume(apply_perturbation(vol, {PerturbKind::kErode, 2.0, *seed}),
                  dir / "volume_erode2.json");
      save_volume(apply_perturbation(vol, {PerturbKind::kTranslate, 2.0, *seed}),
                  dir / "volume_translate2.json");
      save_volume(apply_perturbation(vol, {PerturbKind::kFloaters, 5.0, *seed}),
                  dir / "volume_floaters5.json");
    }
  });
}

inline void add_bench_command(CLI::App& app) {
  auto* cmd = app.add_subcommand("bench", "Sweeps and ordering suites over synthetic scenes");
  auto mode = std::make_shared<std::string>();
  auto scene_dir = std::make_shared<std::string>();
  auto scene_name = std::make_shared<std::string>("textured-sphere");
  auto out = std::make_shared<std::string>();
  auto degrees = std::make_shared<std::vector<int>>(std::vector<int>{0, 1, 2, 3});
  auto resolutions = std::make_shared<std::vector<int>>(std::vector<int>{32, 64, 96});
  auto sh_degree = std::make_shared<int>(2);
  auto threads = std::make_shared<int>(0);
  cmd->add_option("--mode", *mode, "sh-sweep, res-sweep, or ordering")
      ->required()
      ->check(CLI::IsMember({"sh-sweep", "res-sweep", "ordering"}));
  cmd->add_option("--scene-dir", *scene_dir, "Scene directory (sh-sweep, ordering)")
      ->check(CLI::ExistingDirectory);
  cmd->add_option("--scene", *scene_name, "Analytic scene name (res-sweep)");
  cmd->add_option("--degrees", *degrees, "SH degrees to sweep");
  cmd->add_option("--resolutions", *resolutions, "Resolutions to sweep");
  cmd->add_option("--sh-degree", *sh_degree, "SH degree for res-sweep and ordering")
      ->check(CLI::Range(0, kMaxShDegree));
  cmd->add_option("--threads", *threads, "Worker threads (0 = IMRC_THREADS or hardware)");
  cmd->add_option("--out", *out, "Output directory for the table files");

  cmd->callback([=]() {
    const int n_threads = resolve_threads_flag(*threads);
    EvalConfig cfg;
    cfg.sh_degree = *sh_degree;
    Table table;
    if (*mode == "sh-sweep") {
      if (scene_dir->empty()) throw Error("bench sh-sweep requires --scene-dir");
      table = sweep_sh_degree(*scene_dir, *degrees, EvalConfig{}, n_threads);
    } else if (*mode == "res-sweep") {
      table = sweep_resolution(scene_by_name(*scene_name), *resolutions, cfg, 24, 1.0 / 256.0,
                               n_threads);
    } else {
      if (scene_dir->empty()) throw Error("bench ordering requires --scene-dir");
      table = ordering_suite(*scene_dir, cfg, n_threads);
    }

    std::cout << table_markdown(table);
    if (!out->empty()) {
      std::filesystem::create_directories(*out);
      const std::filesystem::path dir(*out);
      write_text_file(table_markdown(table), dir / (*mode + ".md"));
      write_text_file(table_json(table), dir / (*mode + ".json"));
    }
  });
}

}  // namespace detail

// Full command-line surface. Returns the process exit status: 0 on success,
// 2 for usage errors, 1 for runtime failures (one-line message on stderr).
inline int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Geometric quality evaluation of density volumes from calibrated images"};
  app.require_subcommand(1);
  detail::add_imrc_command(app);
  detail::add_chamfer_command(app);
  detail::add_mc_command(app);
  detail::add_render_command(app);
  detail::add_synth_command(app);
  detail::add_bench_command(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // CLI11 returns 0 for --help; everything else is a usage error.
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace imrc
