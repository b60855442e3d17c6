#include "roipose/synth.hpp"

#include "json.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace roipose {

namespace {

constexpr int kMaxPlacementAttempts = 1000;

void validate_config(const SynthConfig& cfg) {
  if (cfg.count < 1) {
    throw std::invalid_argument("sample_scene: count must be at least 1");
  }
  if (!(cfg.depth_min > 0.0) || !(cfg.depth_max > cfg.depth_min)) {
    throw std::invalid_argument("sample_scene: require 0 < depth_min < depth_max");
  }
  if (!(cfg.jitter >= 0.0) || cfg.jitter > 0.3) {
    throw std::invalid_argument("sample_scene: jitter must lie in [0, 0.3]");
  }
  if (!(cfg.image_width > 0.0) || !(cfg.image_height > 0.0)) {
    throw std::invalid_argument("sample_scene: image extent must be positive");
  }
}

bool inside_image(const Rect2D& box, const SynthConfig& cfg) {
  return box.x >= 0.0 && box.y >= 0.0 && box.x + box.w <= cfg.image_width &&
         box.y + box.h <= cfg.image_height;
}

Rect2D jittered_roi(const Rect2D& amodal, double jitter, double image_w,
                    double image_h, Rng& rng) {
  // Four draws happen regardless of jitter so the stream stays aligned
  // across jitter settings.
  const double dx = rng.uniform(-jitter, jitter);
  const double dy = rng.uniform(-jitter, jitter);
  const double dw = rng.uniform(-jitter, jitter);
  const double dh = rng.uniform(-jitter, jitter);

  Rect2D roi{amodal.x + dx * amodal.w, amodal.y + dy * amodal.h,
             amodal.w * (1.0 + dw), amodal.h * (1.0 + dh)};
  // Clamp only when an edge actually leaves the image, so jitter 0
  // reproduces the amodal box bit for bit.
  if (roi.x < 0.0) {
    roi.w += roi.x;
    roi.x = 0.0;
  }
  if (roi.y < 0.0) {
    roi.h += roi.y;
    roi.y = 0.0;
  }
  if (roi.x + roi.w > image_w) {
    roi.w = image_w - roi.x;
  }
  if (roi.y + roi.h > image_h) {
    roi.h = image_h - roi.y;
  }
  return roi;
}

Model model_from_cloud(std::string name, std::vector<Vec3> pts) {
  ModelPoints cloud = ModelPoints::from_points(std::move(pts));
  auto corners = bbox_corners_of(cloud.points);
  return Model{std::move(name), std::move(cloud), corners};
}

Model load_model_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path);
  }

  std::string line;
  int line_no = 0;
  const auto next_line = [&](const char* expectation) {
    if (!std::getline(in, line)) {
      throw std::runtime_error("load_model: " + path + ": truncated file, missing " +
                               expectation + " (line " + std::to_string(line_no + 1) + ")");
    }
    ++line_no;
  };

  next_line("'ply' magic");
  if (line != "ply") {
    throw std::runtime_error("load_model: " + path + ": line 1: not a PLY file");
  }

  std::size_t vertex_count = 0;
  bool have_format = false, have_vertices = false, have_end = false;
  std::vector<std::string> vertex_properties;
  while (!have_end) {
    next_line("'end_header'");
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    if (keyword == "comment" || keyword.empty()) {
      continue;
    }
    if (keyword == "format") {
      std::string kind;
      ls >> kind;
      if (kind != "ascii") {
        throw std::runtime_error("load_model: " + path + ": line " +
                                 std::to_string(line_no) + ": only ascii PLY supported");
      }
      have_format = true;
    } else if (keyword == "element") {
      std::string what;
      ls >> what >> vertex_count;
      if (what != "vertex") {
        throw std::runtime_error("load_model: " + path + ": line " +
                                 std::to_string(line_no) + ": unsupported element '" +
                                 what + "', only vertex x y z is handled");
      }
      have_vertices = true;
    } else if (keyword == "property") {
      std::string type, name;
      ls >> type >> name;
      vertex_properties.push_back(name);
    } else if (keyword == "end_header") {
      have_end = true;
    } else {
      throw std::runtime_error("load_model: " + path + ": line " +
                               std::to_string(line_no) + ": unknown header keyword '" +
                               keyword + "'");
    }
  }
  if (!have_format) {
    throw std::runtime_error("load_model: " + path + ": header missing 'format ascii 1.0'");
  }
  if (!have_vertices) {
    throw std::runtime_error("load_model: " + path + ": header missing 'element vertex'");
  }
  if (vertex_properties != std::vector<std::string>{"x", "y", "z"}) {
    throw std::runtime_error("load_model: " + path +
                             ": vertex properties must be exactly x y z");
  }
  if (vertex_count == 0) {
    throw std::runtime_error("load_model: " + path + ": empty vertex list");
  }

  std::vector<Vec3> pts;
  pts.reserve(vertex_count);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    next_line("vertex data");
    std::istringstream ls(line);
    Vec3 p;
    if (!(ls >> p.x() >> p.y() >> p.z())) {
      throw std::runtime_error("load_model: " + path + ": line " +
                               std::to_string(line_no) + ": expected 3 coordinates");
    }
    pts.push_back(p);
  }
  return model_from_cloud(std::filesystem::path(path).stem().string(), std::move(pts));
}

Model load_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_model: cannot open " + path);
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_model: " + path + ": " + e.what());
  }
  if (!doc.contains("points") || !doc["points"].is_array()) {
    throw std::runtime_error("load_model: " + path + ": missing \"points\" array");
  }
  std::vector<Vec3> pts;
  for (const auto& entry : doc["points"]) {
    if (!entry.is_array() || entry.size() != 3) {
      throw std::runtime_error("load_model: " + path +
                               ": every point must be an [x, y, z] triple");
    }
    pts.emplace_back(entry[0].get<double>(), entry[1].get<double>(),
                     entry[2].get<double>());
  }
  if (pts.empty()) {
    throw std::runtime_error("load_model: " + path + ": empty vertex list");
  }
  return model_from_cloud(std::filesystem::path(path).stem().string(), std::move(pts));
}

}  // namespace

std::array<Vec3, 8> bbox_corners_of(std::span<const Vec3> pts) {
  if (pts.empty()) {
    throw std::invalid_argument("bbox_corners_of: empty point set");
  }
  Vec3 lo = pts[0], hi = pts[0];
  for (const Vec3& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::array<Vec3, 8> corners;
  for (int i = 0; i < 8; ++i) {
    corners[i] = Vec3{(i & 1) ? hi.x() : lo.x(),
                      (i & 2) ? hi.y() : lo.y(),
                      (i & 4) ? hi.z() : lo.z()};
  }
  return corners;
}

std::vector<SceneInstance> sample_scene(const SynthConfig& cfg, const Model& model) {
  validate_config(cfg);
  Rng rng(cfg.seed);

  std::vector<SceneInstance> instances;
  instances.reserve(static_cast<std::size_t>(cfg.count));
  for (int index = 0; index < cfg.count; ++index) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      SceneInstance inst;
      inst.model_id = model.name;
      inst.pose.rotation = rng.unit_quaternion();
      const double depth = rng.uniform(cfg.depth_min, cfg.depth_max);
      const double u = rng.uniform(0.0, cfg.image_width);
      const double v = rng.uniform(0.0, cfg.image_height);
      inst.pose.translation = Vec3{(u - cfg.camera.px) / cfg.camera.fx * depth,
                                   (v - cfg.camera.py) / cfg.camera.fy * depth,
                                   depth};

      std::vector<Vec2> projected;
      try {
        projected = project_points(cfg.camera, inst.pose, model.bbox_corners);
        inst.amodal_box = bbox2d_of(projected);
      } catch (const std::domain_error&) {
        continue;  // a corner fell behind the camera; resample
      }
      if (!inside_image(inst.amodal_box, cfg)) {
        continue;
      }
      std::copy(projected.begin(), projected.end(), inst.box8.begin());
      inst.roi = jittered_roi(inst.amodal_box, cfg.jitter, cfg.image_width,
                              cfg.image_height, rng);
      instances.push_back(std::move(inst));
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error(
          "sample_scene: could not place instance " + std::to_string(index) +
          " inside the image within 1000 attempts; widen the depth range or image");
    }
  }
  return instances;
}

bool is_builtin_model(const std::string& name) {
  return name == "cube" || name == "box" || name == "icosahedron";
}

Model builtin_model(const std::string& name) {
  if (name == "cube") {
    std::vector<Vec3> pts(8);
    for (int i = 0; i < 8; ++i) {
      pts[i] = Vec3{(i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5};
    }
    return model_from_cloud("cube", std::move(pts));
  }
  if (name == "box") {
    std::vector<Vec3> pts(8);
    for (int i = 0; i < 8; ++i) {
      pts[i] = Vec3{(i & 1) ? 0.3 : -0.3, (i & 2) ? 0.2 : -0.2, (i & 4) ? 0.1 : -0.1};
    }
    return model_from_cloud("box", std::move(pts));
  }
  if (name == "icosahedron") {
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    const double scale = 0.5 / std::sqrt(1.0 + phi * phi);  // circumradius 0.5
    std::vector<Vec3> pts;
    for (double a : {-1.0, 1.0}) {
      for (double b : {-phi, phi}) {
        pts.emplace_back(scale * Vec3{0.0, a, b});
        pts.emplace_back(scale * Vec3{a, b, 0.0});
        pts.emplace_back(scale * Vec3{b, 0.0, a});
      }
    }
    return model_from_cloud("icosahedron", std::move(pts));
  }
  throw std::invalid_argument("builtin_model: unknown model '" + name +
                              "' (expected cube, box, or icosahedron)");
}

Model load_model(const std::string& path) {
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".ply") {
    return load_model_ply(path);
  }
  if (ext == ".json") {
    return load_model_json(path);
  }
  throw std::runtime_error("load_model: unsupported extension '" + ext +
                           "' (expected .ply or .json)");
}

}  // namespace roipose
