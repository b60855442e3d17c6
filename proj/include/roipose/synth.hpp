#pragma once

#include "roipose/metrics.hpp"
#include "roipose/rng.hpp"

#include <array>
#include <string>

namespace roipose {

/// Object model: point cloud plus the 8 corners of its axis-aligned
/// bounding box in a fixed order (bit k of the corner index selects
/// max over min on axis k).
struct Model {
  std::string name;
  ModelPoints cloud;
  std::array<Vec3, 8> bbox_corners;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int count = 1;
  double depth_min = 2.0;   // meters; roomy enough for the meter-scale built-ins
  double depth_max = 6.0;
  double jitter = 0.1;      // RoI perturbation fraction, in [0, 0.3]
  CameraIntrinsics camera{500.0, 500.0, 320.0, 240.0};
  double image_width = 640.0;
  double image_height = 480.0;
};

/// One ground-truth instance: pose, the projected 3D-bounding-box corners
/// (the 8-point 2D box), the amodal box enclosing them, and a jittered RoI.
struct SceneInstance {
  Pose pose;
  std::array<Vec2, 8> box8;
  Rect2D amodal_box;
  Rect2D roi;
  std::string model_id;
};

/// Corners of the axis-aligned extent of a point set, in the fixed order
/// described on Model.
std::array<Vec3, 8> bbox_corners_of(std::span<const Vec3> pts);

/// Deterministic scene sampling: rotations are uniform over SO(3), the
/// object center ray is uniform over the image, depth is uniform in
/// [depth_min, depth_max]. Instances whose amodal box leaves the image are
/// rejected and resampled; after 1000 failed attempts for one instance a
/// std::runtime_error is thrown. The RoI is the amodal box shifted by up
/// to jitter * extent and rescaled by 1 +- jitter, clamped to the image;
/// jitter 0 reproduces the amodal box exactly.
///
/// The per-instance draw order (rotation, depth, center u, center v, four
/// jitter values) is part of the contract; see README "Determinism".
std::vector<SceneInstance> sample_scene(const SynthConfig& cfg, const Model& model);

/// Built-in primitive models: "cube" (unit cube corners, diameter sqrt(3)),
/// "box" (rectangular 0.6 x 0.4 x 0.2 box corners), "icosahedron"
/// (12 vertices, diameter 1). Throws std::invalid_argument on other names.
Model builtin_model(const std::string& name);

/// True when the name refers to a built-in model.
bool is_builtin_model(const std::string& name);

/// Loads a model from ASCII PLY (vertex x y z) or JSON
/// {"points": [[x,y,z], ...]}, dispatching on the file extension. Parse
/// failures throw std::runtime_error naming the offending line or element.
Model load_model(const std::string& path);

}  // namespace roipose
