#pragma once

#include "roipose/loss.hpp"
#include "roipose/nonlocal.hpp"
#include "roipose/synth.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace roipose {

using Json = nlohmann::json;

/// Scene file contents. Instances carry stable integer ids; the writer
/// numbers them 0..n-1 in generation order.
struct SceneRecord {
  int id = 0;
  SceneInstance instance;
};

struct SceneFile {
  CameraIntrinsics camera;
  double image_width = 0.0;
  double image_height = 0.0;
  std::string model_name;
  std::vector<SceneRecord> records;
};

// Scene schema:
//   {"camera": {"fx","fy","px","py","width","height"},
//    "model":  "<name>",
//    "instances": [{"id", "model_id",
//                   "pose": {"q": [w,x,y,z], "t": [x,y,d]},
//                   "roi":  [x,y,w,h],
//                   "box8": [[u,v] x 8]}]}
Json scene_to_json(const SceneFile& scene);
SceneFile scene_from_json(const Json& j);

Json pose_to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

Json rect_to_json(const Rect2D& r);
Rect2D rect_from_json(const Json& j);

// Tensor schema: {"shape": [...], "data": [flat, row-major]}.
Json featuremap_to_json(const FeatureMap& fm);
FeatureMap featuremap_from_json(const Json& j);

Json nonlocal_params_to_json(const NonLocalParams& p);
NonLocalParams nonlocal_params_from_json(const Json& j);

Json refine_report_to_json(int instance_id, const RefineReport& report,
                           double final_add);

/// Run manifest written alongside every output file.
struct RunManifest {
  std::string command;
  Json config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  double duration_seconds = 0.0;
};

Json manifest_to_json(const RunManifest& m);

/// CSV table for metric results: one row per instance sorted by id, then
/// summary rows auc_add, auc_add_s, mean_add. Numbers carry 17 significant
/// digits so 64-bit values round-trip.
struct EvalRow {
  int instance_id = 0;
  double add = 0.0;
  double add_s = 0.0;
};

std::string eval_csv(std::span<const EvalRow> rows, double auc_add,
                     double auc_add_s, double mean_add);

/// File helpers. write_text is used for all outputs so runs are
/// reproducible byte for byte.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
Json read_json(const std::string& path);

/// Serializes with 2-space indentation and a trailing newline.
std::string dump_json(const Json& j);

}  // namespace roipose
