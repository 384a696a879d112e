// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "imrc/chamfer.hpp"
#include "imrc/core.hpp"
#include "imrc/io.hpp"
#include "imrc/metric.hpp"
#include "imrc/synth.hpp"

namespace imrc {

// A labelled text table; the common currency of the experiment drivers.
// Every cell is already formatted, so emission is trivially byte-stable.
struct Table {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

inline std::string table_markdown(const Table& t) {
  std::string out = "## " + t.title + "\n\n|";
  for (const auto& c : t.columns) out += " " + c + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += " --- |";
  out += "\n";
  for (const auto& row : t.rows) {
    out += "|";
    for (const auto& cell : row) out += " " + cell + " |";
    out += "\n";
  }
  return out;
}

inline std::string table_json(const Table& t) {
  auto quote = [](const std::string& s) { return "\"" + s + "\""; };
  std::string out = "{\n  \"title\": " + quote(t.title) + ",\n  \"columns\": [";
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    out += (i == 0 ? "" : ", ") + quote(t.columns[i]);
  }
  out += "],\n  \"rows\": [\n";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    out += "    [";
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
      out += (c == 0 ? "" : ", ") + quote(t.rows[r][c]);
    }
    out += r + 1 < t.rows.size() ? "],\n" : "]\n";
  }
  out += "  ]\n}\n";
  return out;
}

namespace detail {

inline std::string fmt_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// The on-disk layout the synth subcommand produces.
inline std::filesystem::path scene_volume(const std::filesystem::path& dir) {
  return dir / "volume.json";
}
inline std::filesystem::path scene_cameras(const std::filesystem::path& dir) {
  return dir / "cameras.json";
}
inline std::filesystem::path scene_gt_cloud(const std::filesystem::path& dir) {
  return dir / "gt_points.ply";
}

// Perturbed variants are any volume_<name>.json beside the ground truth,
// sorted by name so row order never depends on directory iteration order.
inline std::vector<std::filesystem::path> scene_variants(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> variants;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string stem = entry.path().stem().string();
    if (entry.path().extension() == ".json" && stem.rfind("volume_", 0) == 0) {
      variants.push_back(entry.path());
    }
  }
  std::sort(variants.begin(), variants.end());
  return variants;
}

}  // namespace detail

// One IMRC per requested SH degree on a fixed on-disk scene.
inline Table sweep_sh_degree(const std::filesystem::path& scene_dir,
                             const std::vector<int>& degrees, const EvalConfig& base = {},
                             int n_threads = 1) {
  const DensityVolume vol = load_volume(detail::scene_volume(scene_dir));
  const std::vector<CameraModel> cams = load_cameras(detail::scene_cameras(scene_dir));
  Table t;
  t.title = "IMRC by SH degree";
  t.columns = {"sh_degree", "imrc_db", "mrc"};
  for (int degree : degrees) {
    EvalConfig cfg = base;
    cfg.sh_degree = degree;
    const auto [report, grid] = compute_mrc(vol, cams, cfg, n_threads);
    t.rows.push_back({std::to_string(degree), detail::fmt_db(report.imrc_db),
                      detail::fmt_g(report.mrc)});
  }
  return t;
}

// Re-bakes an analytic scene at each resolution and evaluates it against one
// fixed set of rendered views.
inline Table sweep_resolution(const AnalyticScene& scene, const std::vector<int>& resolutions,
                              const EvalConfig& base = {}, int n_cameras = 24,
                              double render_step = 1.0 / 256.0, int n_threads = 1) {
  const Vec3 center = 0.5 * (scene.bbox_min + scene.bbox_max);
  std::vector<CameraModel> cams = camera_rig(RigKind::kRing, n_cameras, 1.0, center);
  const std::vector<ImageBuffer> images = render_views(scene, cams, render_step);
  for (std::size_t i = 0; i < cams.size(); ++i) cams[i].image = images[i];

  Table t;
  t.title = "IMRC by volume resolution";
  t.columns = {"resolution", "imrc_db", "mrc"};
  for (int res : resolutions) {
    const DensityVolume vol = bake_volume(scene, {res, res, res});
    const auto [report, grid] = compute_mrc(vol, cams, base, n_threads);
    t.rows.push_back(
        {std::to_string(res), detail::fmt_db(report.imrc_db), detail::fmt_g(report.mrc)});
  }
  return t;
}

// Checks that the ground-truth volume beats every perturbed variant on IMRC
// (and on Chamfer distance when a ground-truth cloud is present). Failures
// are rows, not errors.
inline Table ordering_suite(const std::filesystem::path& scene_dir, const EvalConfig& base = {},
                            int n_threads = 1) {
  const DensityVolume gt_vol = load_volume(detail::scene_volume(scene_dir));
  const std::vector<CameraModel> cams = load_cameras(detail::scene_cameras(scene_dir));
  const auto [gt_report, gt_grid] = compute_mrc(gt_vol, cams, base, n_threads);

  const bool have_cloud = std::filesystem::exists(detail::scene_gt_cloud(scene_dir));
  PointCloud gt_cloud;
  double gt_cd = 0.0;
  if (have_cloud) {
    gt_cloud = read_ply_points(detail::scene_gt_cloud(scene_dir));
    CDSearchOptions opt;
    opt.n_threads = n_threads;
    gt_cd = best_cd(gt_vol, gt_cloud, opt).best_cd;
  }

  Table t;
  t.title = "Ground truth vs. perturbed variants";
  t.columns = {"variant", "imrc_db", "imrc_margin_db", "imrc_ok", "cd", "cd_ok"};
  t.rows.push_back({"ground_truth", detail::fmt_db(gt_report.imrc_db), "-", "-",
                    have_cloud ? detail::fmt_g(gt_cd) : "-", "-"});

  for (const auto& variant_path : detail::scene_variants(scene_dir)) {
    const std::string name = variant_path.stem().string().substr(std::string("volume_").size());
    const DensityVolume vol = load_volume(variant_path);
    const auto [report, grid] = compute_mrc(vol, cams, base, n_threads);
    const double margin = gt_report.imrc_db - report.imrc_db;
    const bool imrc_ok = gt_report.imrc_db > report.imrc_db;

    std::string cd_cell = "-";
    std::string cd_ok_cell = "-";
    if (have_cloud) {
      CDSearchOptions opt;
      opt.n_threads = n_threads;
      const double cd = best_cd(vol, gt_cloud, opt).best_cd;
      cd_cell = detail::fmt_g(cd);
      cd_ok_cell = cd > gt_cd ? "pass" : "FAIL";
    }
    t.rows.push_back({name, detail::fmt_db(report.imrc_db), detail::fmt_db(margin),
                      imrc_ok ? "pass" : "FAIL", cd_cell, cd_ok_cell});
  }
  return t;
}

}  // namespace imrc
