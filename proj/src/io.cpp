#include "roipose/io.hpp"

#include "roipose/version.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace roipose {

namespace {

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Json vec3_to_json(const Vec3& v) {
  return Json::array({v.x(), v.y(), v.z()});
}

Vec3 vec3_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("scene: expected a 3-element array");
  }
  return Vec3{j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      data.push_back(m(r, c));
    }
  }
  return Json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto& shape = j.at("shape");
  const auto& data = j.at("data");
  if (shape.size() != 2) {
    throw std::runtime_error("tensor: expected a rank-2 shape");
  }
  const Eigen::Index rows = shape[0].get<Eigen::Index>();
  const Eigen::Index cols = shape[1].get<Eigen::Index>();
  if (data.size() != static_cast<std::size_t>(rows * cols)) {
    throw std::runtime_error("tensor: data length does not match shape");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = data[k++].get<double>();
    }
  }
  return m;
}

}  // namespace

Json pose_to_json(const Pose& pose) {
  const Quaternion q = pose.rotation.normalized();
  return Json{{"q", {q.w, q.x, q.y, q.z}}, {"t", vec3_to_json(pose.translation)}};
}

Pose pose_from_json(const Json& j) {
  const auto& q = j.at("q");
  if (!q.is_array() || q.size() != 4) {
    throw std::runtime_error("pose: \"q\" must be [w, x, y, z]");
  }
  Pose pose;
  pose.rotation = Quaternion{q[0].get<double>(), q[1].get<double>(),
                             q[2].get<double>(), q[3].get<double>()}
                      .normalized();
  pose.translation = vec3_from_json(j.at("t"));
  return pose;
}

Json rect_to_json(const Rect2D& r) {
  return Json::array({r.x, r.y, r.w, r.h});
}

Rect2D rect_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw std::runtime_error("rect: expected [x, y, w, h]");
  }
  return Rect2D{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
}

Json scene_to_json(const SceneFile& scene) {
  Json instances = Json::array();
  for (const SceneRecord& rec : scene.records) {
    const SceneInstance& inst = rec.instance;
    Json box8 = Json::array();
    for (const Vec2& p : inst.box8) {
      box8.push_back(Json::array({p.x(), p.y()}));
    }
    instances.push_back(Json{{"id", rec.id},
                             {"model_id", inst.model_id},
                             {"pose", pose_to_json(inst.pose)},
                             {"roi", rect_to_json(inst.roi)},
                             {"box8", std::move(box8)}});
  }
  return Json{{"camera",
               {{"fx", scene.camera.fx},
                {"fy", scene.camera.fy},
                {"px", scene.camera.px},
                {"py", scene.camera.py},
                {"width", scene.image_width},
                {"height", scene.image_height}}},
              {"model", scene.model_name},
              {"instances", std::move(instances)}};
}

SceneFile scene_from_json(const Json& j) {
  SceneFile scene;
  const auto& cam = j.at("camera");
  scene.camera = CameraIntrinsics{cam.at("fx").get<double>(), cam.at("fy").get<double>(),
                                  cam.at("px").get<double>(), cam.at("py").get<double>()};
  scene.image_width = cam.at("width").get<double>();
  scene.image_height = cam.at("height").get<double>();
  scene.model_name = j.at("model").get<std::string>();

  for (const auto& entry : j.at("instances")) {
    SceneRecord rec;
    rec.id = entry.at("id").get<int>();
    rec.instance.model_id = entry.value("model_id", scene.model_name);
    rec.instance.pose = pose_from_json(entry.at("pose"));
    rec.instance.roi = rect_from_json(entry.at("roi"));
    const auto& box8 = entry.at("box8");
    if (!box8.is_array() || box8.size() != 8) {
      throw std::runtime_error("scene: \"box8\" must hold 8 points");
    }
    std::vector<Vec2> pts;
    for (const auto& p : box8) {
      if (!p.is_array() || p.size() != 2) {
        throw std::runtime_error("scene: box8 entries must be [u, v]");
      }
      pts.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    std::copy(pts.begin(), pts.end(), rec.instance.box8.begin());
    rec.instance.amodal_box = bbox2d_of(pts);
    scene.records.push_back(std::move(rec));
  }
  return scene;
}

Json featuremap_to_json(const FeatureMap& fm) {
  return Json{{"shape", {fm.channels, fm.height, fm.width}}, {"data", fm.data}};
}

FeatureMap featuremap_from_json(const Json& j) {
  const auto& shape = j.at("shape");
  if (shape.size() != 3) {
    throw std::runtime_error("feature map: expected shape [C, H, W]");
  }
  FeatureMap fm;
  fm.channels = shape[0].get<int>();
  fm.height = shape[1].get<int>();
  fm.width = shape[2].get<int>();
  fm.data = j.at("data").get<std::vector<double>>();
  if (fm.data.size() !=
      static_cast<std::size_t>(fm.channels) * fm.height * fm.width) {
    throw std::runtime_error("feature map: data length does not match shape");
  }
  return fm;
}

Json nonlocal_params_to_json(const NonLocalParams& p) {
  return Json{{"w_theta", matrix_to_json(p.w_theta)},
              {"w_phi", matrix_to_json(p.w_phi)},
              {"w_g", matrix_to_json(p.w_g)},
              {"w_z", matrix_to_json(p.w_z)}};
}

NonLocalParams nonlocal_params_from_json(const Json& j) {
  NonLocalParams p;
  p.w_theta = matrix_from_json(j.at("w_theta"));
  p.w_phi = matrix_from_json(j.at("w_phi"));
  p.w_g = matrix_from_json(j.at("w_g"));
  p.w_z = matrix_from_json(j.at("w_z"));
  return p;
}

Json refine_report_to_json(int instance_id, const RefineReport& report,
                           double final_add) {
  return Json{{"instance_id", instance_id},
              {"pose", pose_to_json(report.pose)},
              {"final_loss", report.loss},
              {"final_add", final_add},
              {"iterations", report.iterations},
              {"converged", report.converged},
              {"trace", report.trace}};
}

Json manifest_to_json(const RunManifest& m) {
  return Json{{"command", m.command},
              {"tool_version", kVersion},
              {"config", m.config},
              {"inputs", m.inputs},
              {"outputs", m.outputs},
              {"seed", m.seed},
              {"duration_seconds", m.duration_seconds}};
}

std::string eval_csv(std::span<const EvalRow> rows, double auc_add,
                     double auc_add_s, double mean_add) {
  std::ostringstream out;
  out << "instance_id,add,add_s\n";
  for (const EvalRow& row : rows) {
    out << row.instance_id << ',' << format_g17(row.add) << ','
        << format_g17(row.add_s) << '\n';
  }
  out << "auc_add," << format_g17(auc_add) << '\n';
  out << "auc_add_s," << format_g17(auc_add_s) << '\n';
  out << "mean_add," << format_g17(mean_add) << '\n';
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing " + path);
  }
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string dump_json(const Json& j) {
  return j.dump(2) + "\n";
}

}  // namespace roipose
