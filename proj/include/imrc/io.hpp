// Copyright Contributors to the imrc Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "json.hpp"

#include "imrc/camera.hpp"
#include "imrc/chamfer.hpp"
#include "imrc/core.hpp"
#include "imrc/density_grid.hpp"
#include "imrc/marching_cubes.hpp"
#include "imrc/metric.hpp"

namespace imrc {

namespace detail {

// Shortest decimal that round-trips a double exactly.
inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open file: " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

inline nlohmann::json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("malformed JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

inline float float_from_le_bytes(const char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

inline void float_to_le_bytes(float f, char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  if constexpr (std::endian::native == std::endian::big) {
    bits = __builtin_bswap32(bits);
  }
  std::memcpy(p, &bits, 4);
}

}  // namespace detail

struct LoadStats {
  std::size_t negatives_clamped = 0;
};

// Header JSON + raw little-endian float32 payload, x-fastest. Negative
// densities are clamped to zero and counted; non-finite values are refused.
inline DensityVolume load_volume(const std::filesystem::path& header_path,
                                 LoadStats* stats = nullptr) {
  const nlohmann::json j = detail::parse_json_file(header_path);
  for (const char* key : {"resolution", "bbox_min", "bbox_max", "data", "order", "endianness"}) {
    if (!j.contains(key)) {
      throw LoadError("volume header missing field '" + std::string(key) + "': " +
                      header_path.string());
    }
  }
  if (j["order"] != "x-fastest") throw LoadError("volume header: order must be \"x-fastest\"");
  if (j["endianness"] != "little") throw LoadError("volume header: endianness must be \"little\"");

  GridIndex res;
  try {
    res = {j["resolution"].at(0).get<int>(), j["resolution"].at(1).get<int>(),
           j["resolution"].at(2).get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("volume header: bad resolution: ") + e.what());
  }
  if (res.x < 2 || res.y < 2 || res.z < 2) {
    throw LoadError("volume header: resolution must be at least 2 per axis");
  }
  Vec3 bbox_min, bbox_max;
  try {
    bbox_min = {j["bbox_min"].at(0).get<double>(), j["bbox_min"].at(1).get<double>(),
                j["bbox_min"].at(2).get<double>()};
    bbox_max = {j["bbox_max"].at(0).get<double>(), j["bbox_max"].at(1).get<double>(),
                j["bbox_max"].at(2).get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("volume header: bad bbox: ") + e.what());
  }

  const std::filesystem::path raw_path =
      header_path.parent_path() / j["data"].get<std::string>();
  const std::vector<char> bytes = detail::read_file_bytes(raw_path);
  const std::size_t expect =
      4ull * static_cast<std::size_t>(res.x) * res.y * res.z;
  if (bytes.size() != expect) {
    throw LoadError("volume data length mismatch: " + raw_path.string() + " holds " +
                    std::to_string(bytes.size()) + " bytes, header implies " +
                    std::to_string(expect));
  }

  DensityVolume vol = make_volume(res, bbox_min, bbox_max);
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    float v = detail::float_from_le_bytes(bytes.data() + 4 * i);
    if (!std::isfinite(v)) {
      throw LoadError("volume data contains a non-finite value at linear index " +
                      std::to_string(i));
    }
    if (v < 0.0f) {
      v = 0.0f;
      ++clamped;
    }
    vol.values[i] = v;
  }
  if (stats != nullptr) stats->negatives_clamped = clamped;
  vol.validate();
  return vol;
}

// Writes <stem>.raw beside the header. The header stores only the raw file's
// basename so the pair relocates together.
inline void save_volume(const DensityVolume& vol, const std::filesystem::path& header_path) {
  vol.validate();
  std::filesystem::path raw_path = header_path;
  raw_path.replace_extension(".raw");

  std::vector<char> bytes(4ull * vol.values.size());
  for (std::size_t i = 0; i < vol.values.size(); ++i) {
    detail::float_to_le_bytes(vol.values[i], bytes.data() + 4 * i);
  }
  {
    std::ofstream out(raw_path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + raw_path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + raw_path.string());
  }

  std::ostringstream j;
  j << "{\n";
  j << "  \"resolution\": [" << vol.resolution.x << ", " << vol.resolution.y << ", "
    << vol.resolution.z << "],\n";
  j << "  \"bbox_min\": [" << detail::fmt_double(vol.bbox_min.x) << ", "
    << detail::fmt_double(vol.bbox_min.y) << ", " << detail::fmt_double(vol.bbox_min.z) << "],\n";
  j << "  \"bbox_max\": [" << detail::fmt_double(vol.bbox_max.x) << ", "
    << detail::fmt_double(vol.bbox_max.y) << ", " << detail::fmt_double(vol.bbox_max.z) << "],\n";
  j << "  \"data\": \"" << raw_path.filename().string() << "\",\n";
  j << "  \"order\": \"x-fastest\",\n";
  j << "  \"endianness\": \"little\"\n";
  j << "}\n";
  std::ofstream out(header_path);
  if (!out) throw Error("cannot write file: " + header_path.string());
  out << j.str();
  if (!out) throw Error("write failed: " + header_path.string());
}

namespace detail {

struct PngReadGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngReadGuard() {
    if (png != nullptr) png_destroy_read_struct(&png, info != nullptr ? &info : nullptr, nullptr);
    if (fp != nullptr) std::fclose(fp);
  }
};

struct PngWriteGuard {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* fp = nullptr;
  ~PngWriteGuard() {
    if (png != nullptr) png_destroy_write_struct(&png, info != nullptr ? &info : nullptr);
    if (fp != nullptr) std::fclose(fp);
  }
};

}  // namespace detail

// Decodes any libpng-readable image to RGB8, then to [0,1] colors by /255.
inline ImageBuffer read_png(const std::filesystem::path& path) {
  detail::PngReadGuard g;
  std::vector<png_byte> row;  // before setjmp so longjmp never skips its init
  ImageBuffer img;
  g.fp = std::fopen(path.string().c_str(), "rb");
  if (g.fp == nullptr) throw LoadError("cannot open image: " + path.string());

  g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (g.png == nullptr) throw LoadError("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (g.info == nullptr) throw LoadError("libpng init failed");
  if (setjmp(png_jmpbuf(g.png))) throw LoadError("PNG decode failed: " + path.string());

  png_init_io(g.png, g.fp);
  png_read_info(g.png, g.info);

  // Normalize every input layout to 8-bit RGB.
  png_set_strip_16(g.png);
  png_set_packing(g.png);
  const int color_type = png_get_color_type(g.png, g.info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_expand_gray_1_2_4_to_8(g.png);
    png_set_gray_to_rgb(g.png);
  }
  if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
  if ((color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
      png_get_valid(g.png, g.info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(g.png);
  }
  png_read_update_info(g.png, g.info);

  const png_uint_32 w = png_get_image_width(g.png, g.info);
  const png_uint_32 h = png_get_image_height(g.png, g.info);
  if (png_get_channels(g.png, g.info) != 3 || png_get_bit_depth(g.png, g.info) != 8) {
    throw LoadError("PNG did not normalize to RGB8: " + path.string());
  }

  row.resize(3ull * w);
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.resize(static_cast<std::size_t>(w) * h);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(g.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      img.pixels[static_cast<std::size_t>(y) * w + x] = {row[3 * x] / 255.0,
                                                         row[3 * x + 1] / 255.0,
                                                         row[3 * x + 2] / 255.0};
    }
  }
  png_read_end(g.png, nullptr);
  return img;
}

// 8-bit RGB PNG; channels clamped to [0,1] and rounded to the nearest level.
inline void write_png(const ImageBuffer& img, const std::filesystem::path& path) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() != static_cast<std::size_t>(img.width) * img.height) {
    throw Error("write_png: malformed image buffer");
  }
  detail::PngWriteGuard g;
  std::vector<png_byte> row(3ull * img.width);
  g.fp = std::fopen(path.string().c_str(), "wb");
  if (g.fp == nullptr) throw Error("cannot write image: " + path.string());

  g.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (g.png == nullptr) throw Error("libpng init failed");
  g.info = png_create_info_struct(g.png);
  if (g.info == nullptr) throw Error("libpng init failed");
  if (setjmp(png_jmpbuf(g.png))) throw Error("PNG encode failed: " + path.string());

  png_init_io(g.png, g.fp);
  png_set_IHDR(g.png, g.info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(g.png, g.info);

  auto quantize = [](double v) {
    return static_cast<png_byte>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Color& c = img.pixels[static_cast<std::size_t>(y) * img.width + x];
      row[3 * x] = quantize(c.r);
      row[3 * x + 1] = quantize(c.g);
      row[3 * x + 2] = quantize(c.b);
    }
    png_write_row(g.png, row.data());
  }
  png_write_end(g.png, nullptr);
}

// Maps [vmin, vmax] to 8-bit gray; background (NaN) pixels write as black.
inline void write_png_gray(const ScalarImage& img, double vmin, double vmax,
                           const std::filesystem::path& path) {
  if (!(vmax > vmin)) throw Error("write_png_gray: requires vmax > vmin");
  ImageBuffer rgb;
  rgb.width = img.width;
  rgb.height = img.height;
  rgb.pixels.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i) {
    const double v = img.values[i];
    const double t = ScalarImage::is_background(v) ? 0.0 : (v - vmin) / (vmax - vmin);
    rgb.pixels[i] = {t, t, t};
  }
  write_png(rgb, path);
}

// Bundle JSON listing per-camera intrinsics, cam_to_world pose, and an image
// path relative to the bundle file.
inline std::vector<CameraModel> load_cameras(const std::filesystem::path& bundle_path) {
  const nlohmann::json j = detail::parse_json_file(bundle_path);
  if (!j.contains("cameras") || !j["cameras"].is_array()) {
    throw LoadError("camera bundle missing \"cameras\" array: " + bundle_path.string());
  }
  std::vector<CameraModel> cams;
  for (const auto& cj : j["cameras"]) {
    CameraModel cam;
    try {
      cam.id = cj.at("id").get<std::string>();
      cam.width = cj.at("width").get<int>();
      cam.height = cj.at("height").get<int>();
      const auto& intr = cj.at("intrinsics");
      const auto& pose = cj.at("cam_to_world");
      if (intr.size() != 9 || pose.size() != 16) {
        throw LoadError("camera '" + cam.id + "': intrinsics must have 9 entries, pose 16");
      }
      // Row-major [fx 0 cx; 0 fy cy; 0 0 1].
      cam.fx = intr.at(0).get<double>();
      cam.fy = intr.at(4).get<double>();
      cam.cx = intr.at(2).get<double>();
      cam.cy = intr.at(5).get<double>();
      const double skew = intr.at(1).get<double>();
      const double bottom[3] = {intr.at(6).get<double>(), intr.at(7).get<double>(),
                                intr.at(8).get<double>()};
      if (std::abs(skew) > 1e-9 || std::abs(intr.at(3).get<double>()) > 1e-9 ||
          std::abs(bottom[0]) > 1e-9 || std::abs(bottom[1]) > 1e-9 ||
          std::abs(bottom[2] - 1.0) > 1e-9) {
        throw LoadError("camera '" + cam.id + "': intrinsics must be [fx 0 cx; 0 fy cy; 0 0 1]");
      }
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
          cam.rotation[3 * r + c] = pose.at(4 * r + c).get<double>();
        }
      }
      cam.origin = {pose.at(3).get<double>(), pose.at(7).get<double>(),
                    pose.at(11).get<double>()};
      if (std::abs(pose.at(12).get<double>()) > 1e-9 ||
          std::abs(pose.at(13).get<double>()) > 1e-9 ||
          std::abs(pose.at(14).get<double>()) > 1e-9 ||
          std::abs(pose.at(15).get<double>() - 1.0) > 1e-9) {
        throw LoadError("camera '" + cam.id + "': pose bottom row must be [0 0 0 1]");
      }
    } catch (const nlohmann::json::exception& e) {
      throw LoadError("camera bundle " + bundle_path.string() + ": " + e.what());
    }

    // Orthonormality: R^T R = I within 1e-4 and det +1 (det -1 mirrors).
    const auto& R = cam.rotation;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        double d = 0.0;
        for (int k = 0; k < 3; ++k) d += R[3 * k + a] * R[3 * k + b];
        const double expect = a == b ? 1.0 : 0.0;
        if (std::abs(d - expect) > 1e-4) {
          throw LoadError("camera '" + cam.id + "': rotation is not orthonormal");
        }
      }
    }
    const double det = R[0] * (R[4] * R[8] - R[5] * R[7]) - R[1] * (R[3] * R[8] - R[5] * R[6]) +
                       R[2] * (R[3] * R[7] - R[4] * R[6]);
    if (det < 0.0) {
      throw LoadError("camera '" + cam.id + "': rotation has negative determinant");
    }

    const std::filesystem::path img_path =
        bundle_path.parent_path() / cj.at("image").get<std::string>();
    if (!std::filesystem::exists(img_path)) {
      throw LoadError("camera '" + cam.id + "': image file missing: " + img_path.string());
    }
    cam.image = read_png(img_path);
    if (cam.image.width != cam.width || cam.image.height != cam.height) {
      throw LoadError("camera '" + cam.id + "': image is " + std::to_string(cam.image.width) +
                      "x" + std::to_string(cam.image.height) + ", bundle declares " +
                      std::to_string(cam.width) + "x" + std::to_string(cam.height));
    }
    cams.push_back(std::move(cam));
  }
  return cams;
}

// Writes one PNG per camera beside the bundle, then the bundle JSON itself.
inline void save_cameras(const std::vector<CameraModel>& cams,
                         const std::filesystem::path& bundle_path) {
  const std::filesystem::path dir = bundle_path.parent_path();
  std::ostringstream j;
  j << "{\n  \"cameras\": [\n";
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const CameraModel& cam = cams[i];
    const std::string img_name = cam.id + ".png";
    write_png(cam.image, dir / img_name);
    j << "    {\n";
    j << "      \"id\": \"" << cam.id << "\",\n";
    j << "      \"width\": " << cam.width << ",\n";
    j << "      \"height\": " << cam.height << ",\n";
    j << "      \"intrinsics\": [" << detail::fmt_double(cam.fx) << ", 0, "
      << detail::fmt_double(cam.cx) << ", 0, " << detail::fmt_double(cam.fy) << ", "
      << detail::fmt_double(cam.cy) << ", 0, 0, 1],\n";
    j << "      \"cam_to_world\": [";
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        j << detail::fmt_double(cam.rotation[3 * r + c]) << ", ";
      }
      const double o = r == 0 ? cam.origin.x : (r == 1 ? cam.origin.y : cam.origin.z);
      j << detail::fmt_double(o) << ", ";
    }
    j << "0, 0, 0, 1],\n";
    j << "      \"image\": \"" << img_name << "\"\n";
    j << "    }" << (i + 1 < cams.size() ? "," : "") << "\n";
  }
  j << "  ]\n}\n";
  std::ofstream out(bundle_path);
  if (!out) throw Error("cannot write file: " + bundle_path.string());
  out << j.str();
  if (!out) throw Error("write failed: " + bundle_path.string());
}

namespace detail {

// Minimal PLY subset: float32 x,y,z vertices, optional triangle faces,
// ascii or binary little-endian.
struct PlyHeader {
  bool binary = false;
  std::size_t n_vertices = 0;
  std::size_t n_faces = 0;
  std::size_t header_end = 0;  // byte offset where data begins
};

inline PlyHeader parse_ply_header(const std::vector<char>& bytes,
                                  const std::filesystem::path& path) {
  PlyHeader h;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    std::size_t end = pos;
    while (end < bytes.size() && bytes[end] != '\n') ++end;
    if (end >= bytes.size()) throw LoadError("PLY header truncated: " + path.string());
    std::string line(bytes.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  if (next_line() != "ply") throw LoadError("not a PLY file: " + path.string());
  std::string current_element;
  int vertex_props = 0;
  for (;;) {
    const std::string line = next_line();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") {
        h.binary = false;
      } else if (fmt == "binary_little_endian") {
        h.binary = true;
      } else {
        throw LoadError("unsupported PLY format '" + fmt + "': " + path.string());
      }
    } else if (tok == "comment") {
      continue;
    } else if (tok == "element") {
      std::string name;
      std::size_t count = 0;
      ss >> name >> count;
      current_element = name;
      if (name == "vertex") {
        h.n_vertices = count;
      } else if (name == "face") {
        h.n_faces = count;
      } else {
        throw LoadError("unsupported PLY element '" + name + "': " + path.string());
      }
    } else if (tok == "property") {
      if (current_element == "vertex") {
        std::string type, name;
        ss >> type >> name;
        if (type != "float" && type != "float32") {
          throw LoadError("PLY vertex properties must be float32: " + path.string());
        }
        const char* expect[3] = {"x", "y", "z"};
        if (vertex_props >= 3 || name != expect[vertex_props]) {
          throw LoadError("PLY vertex properties must be exactly x, y, z: " + path.string());
        }
        ++vertex_props;
      }
      // Face list property format is fixed; tolerate the declared types.
    } else if (tok == "end_header") {
      break;
    } else {
      throw LoadError("unsupported PLY header line '" + line + "': " + path.string());
    }
  }
  if (h.n_vertices == 0) throw LoadError("PLY has no vertices: " + path.string());
  if (vertex_props != 3) throw LoadError("PLY vertex element lacks x, y, z: " + path.string());
  h.header_end = pos;
  return h;
}

}  // namespace detail

inline TriangleMesh read_ply_mesh(const std::filesystem::path& path) {
  const std::vector<char> bytes = detail::read_file_bytes(path);
  const detail::PlyHeader h = detail::parse_ply_header(bytes, path);
  TriangleMesh mesh;
  mesh.vertices.reserve(h.n_vertices);

  if (h.binary) {
    std::size_t pos = h.header_end;
    auto need = [&](std::size_t n) {
      if (pos + n > bytes.size()) throw LoadError("PLY data truncated: " + path.string());
    };
    for (std::size_t i = 0; i < h.n_vertices; ++i) {
      need(12);
      const float x = detail::float_from_le_bytes(bytes.data() + pos);
      const float y = detail::float_from_le_bytes(bytes.data() + pos + 4);
      const float z = detail::float_from_le_bytes(bytes.data() + pos + 8);
      pos += 12;
      mesh.vertices.push_back({x, y, z});
    }
    for (std::size_t i = 0; i < h.n_faces; ++i) {
      need(1);
      const unsigned count = static_cast<unsigned char>(bytes[pos]);
      pos += 1;
      if (count != 3) throw LoadError("PLY faces must be triangles: " + path.string());
      need(12);
      std::uint32_t idx[3];
      std::memcpy(idx, bytes.data() + pos, 12);
      if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : idx) v = __builtin_bswap32(v);
      }
      pos += 12;
      mesh.triangles.push_back({idx[0], idx[1], idx[2]});
    }
  } else {
    std::istringstream ss(std::string(bytes.data() + h.header_end,
                                      bytes.size() - h.header_end));
    for (std::size_t i = 0; i < h.n_vertices; ++i) {
      float x, y, z;
      if (!(ss >> x >> y >> z)) throw LoadError("PLY vertex data truncated: " + path.string());
      mesh.vertices.push_back({x, y, z});
    }
    for (std::size_t i = 0; i < h.n_faces; ++i) {
      unsigned count;
      std::uint32_t a, b, c;
      if (!(ss >> count >> a >> b >> c) || count != 3) {
        throw LoadError("PLY faces must be triangles: " + path.string());
      }
      mesh.triangles.push_back({a, b, c});
    }
  }

  for (const auto& t : mesh.triangles) {
    for (std::uint32_t v : t) {
      if (v >= mesh.vertices.size()) {
        throw LoadError("PLY face index out of range: " + path.string());
      }
    }
  }
  return mesh;
}

inline PointCloud read_ply_points(const std::filesystem::path& path) {
  const TriangleMesh mesh = read_ply_mesh(path);
  PointCloud cloud;
  cloud.points = mesh.vertices;
  return cloud;
}

// Vertices are float32 in the file, so coordinates round-trip bit-exactly
// when they came from float32 (ascii uses %.9g, enough for any float32).
inline void write_ply_mesh(const TriangleMesh& mesh, const std::filesystem::path& path,
                           bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << "ply\n";
  out << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n");
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  if (!mesh.triangles.empty()) {
    out << "element face " << mesh.triangles.size() << "\n";
    out << "property list uchar uint vertex_indices\n";
  }
  out << "end_header\n";

  if (binary) {
    for (const Vec3& v : mesh.vertices) {
      char buf[12];
      detail::float_to_le_bytes(static_cast<float>(v.x), buf);
      detail::float_to_le_bytes(static_cast<float>(v.y), buf + 4);
      detail::float_to_le_bytes(static_cast<float>(v.z), buf + 8);
      out.write(buf, 12);
    }
    for (const auto& t : mesh.triangles) {
      const char count = 3;
      out.write(&count, 1);
      std::uint32_t idx[3] = {t[0], t[1], t[2]};
      if constexpr (std::endian::native == std::endian::big) {
        for (auto& v : idx) v = __builtin_bswap32(v);
      }
      out.write(reinterpret_cast<const char*>(idx), 12);
    }
  } else {
    char buf[128];
    for (const Vec3& v : mesh.vertices) {
      std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", v.x, v.y, v.z);
      out << buf;
    }
    for (const auto& t : mesh.triangles) {
      out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
    }
  }
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_ply_points(const PointCloud& cloud, const std::filesystem::path& path,
                             bool binary) {
  TriangleMesh mesh;
  mesh.vertices = cloud.points;
  write_ply_mesh(mesh, path, binary);
}

// Fixed field order and 17-significant-digit floats make reports byte-stable
// across runs and thread counts. A non-finite IMRC (zero residual) encodes
// as null.
inline std::string metric_report_json(const MetricReport& report) {
  std::ostringstream j;
  j << "{\n";
  j << "  \"schema\": 1,\n";
  j << "  \"mrc\": " << detail::fmt_double(report.mrc) << ",\n";
  j << "  \"imrc_db\": "
    << (report.imrc_is_finite() ? detail::fmt_double(report.imrc_db) : std::string("null"))
    << ",\n";
  j << "  \"sh_degree\": " << report.sh_degree << ",\n";
  j << "  \"resolution\": [" << report.resolution.x << ", " << report.resolution.y << ", "
    << report.resolution.z << "],\n";
  j << "  \"ray_step\": " << detail::fmt_double(report.ray_step) << ",\n";
  j << "  \"voxels_evaluated\": " << report.voxels_evaluated << ",\n";
  j << "  \"voxels_skipped_low_alpha\": " << report.voxels_skipped_low_alpha << ",\n";
  j << "  \"voxels_skipped_no_observation\": " << report.voxels_skipped_no_observation << "\n";
  j << "}\n";
  return j.str();
}

inline std::string cd_result_json(const CDSearchResult& result) {
  std::ostringstream j;
  j << "{\n";
  j << "  \"schema\": 1,\n";
  j << "  \"best_threshold\": " << detail::fmt_double(result.best_threshold) << ",\n";
  j << "  \"best_cd\": " << detail::fmt_double(result.best_cd) << ",\n";
  j << "  \"bracket_lo\": " << detail::fmt_double(result.bracket_lo) << ",\n";
  j << "  \"bracket_hi\": " << detail::fmt_double(result.bracket_hi) << ",\n";
  j << "  \"evaluations\": [";
  for (std::size_t i = 0; i < result.evaluations.size(); ++i) {
    j << (i == 0 ? "" : ", ") << "[" << detail::fmt_double(result.evaluations[i].first) << ", "
      << detail::fmt_double(result.evaluations[i].second) << "]";
  }
  j << "]\n}\n";
  return j.str();
}

inline void write_text_file(const std::string& content, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace imrc
