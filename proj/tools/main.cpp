// roipose command-line tool: deterministic scene synthesis, normalization
// round trips, oracle check suites, pose refinement, and metric evaluation.
//
// Exit codes: 0 success, 1 runtime or check failure, 2 usage error.

#include "roipose/io.hpp"
#include "roipose/metrics.hpp"
#include "roipose/roi_camera.hpp"
#include "roipose/verify.hpp"
#include "roipose/version.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <string>

namespace {

using namespace roipose;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Model resolve_model(const std::string& name_or_path) {
  return is_builtin_model(name_or_path) ? builtin_model(name_or_path)
                                        : load_model(name_or_path);
}

void write_manifest(const std::string& out_path, const RunManifest& manifest) {
  write_text(out_path + ".manifest.json", dump_json(manifest_to_json(manifest)));
}

struct SynthOptions {
  std::uint64_t seed = 0;
  int count = 10;
  std::string model = "cube";
  double jitter = 0.1;
  std::string out;
  double fx = 500.0, fy = 500.0, px = 320.0, py = 240.0;
  double width = 640.0, height = 480.0;
  double depth_min = 0.5, depth_max = 2.0;
};

int run_synth(const SynthOptions& opt) {
  Stopwatch watch;
  const Model model = resolve_model(opt.model);

  SynthConfig cfg;
  cfg.seed = opt.seed;
  cfg.count = opt.count;
  cfg.jitter = opt.jitter;
  cfg.depth_min = opt.depth_min;
  cfg.depth_max = opt.depth_max;
  cfg.camera = CameraIntrinsics{opt.fx, opt.fy, opt.px, opt.py};
  cfg.image_width = opt.width;
  cfg.image_height = opt.height;

  SceneFile scene;
  scene.camera = cfg.camera;
  scene.image_width = cfg.image_width;
  scene.image_height = cfg.image_height;
  scene.model_name = opt.model;
  int next_id = 0;
  for (SceneInstance& inst : sample_scene(cfg, model)) {
    scene.records.push_back(SceneRecord{next_id++, std::move(inst)});
  }
  write_text(opt.out, dump_json(scene_to_json(scene)));

  RunManifest manifest;
  manifest.command = "synth";
  manifest.seed = opt.seed;
  manifest.config = Json{{"seed", opt.seed},       {"count", opt.count},
                         {"model", opt.model},     {"jitter", opt.jitter},
                         {"fx", opt.fx},           {"fy", opt.fy},
                         {"px", opt.px},           {"py", opt.py},
                         {"width", opt.width},     {"height", opt.height},
                         {"dmin", opt.depth_min},  {"dmax", opt.depth_max}};
  manifest.outputs = {opt.out};
  manifest.duration_seconds = watch.seconds();
  write_manifest(opt.out, manifest);

  std::cout << "wrote " << scene.records.size() << " instances to " << opt.out << "\n";
  return 0;
}

struct RoundtripOptions {
  std::string scene;
  std::string model_override;
  double tol = 1e-9;
  std::string out;
};

int run_roundtrip(const RoundtripOptions& opt) {
  Stopwatch watch;
  const SceneFile scene = scene_from_json(read_json(opt.scene));
  const Model model = resolve_model(
      opt.model_override.empty() ? scene.model_name : opt.model_override);
  const double m_i = identity_area(scene.camera, model.bbox_corners);

  const auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max(1.0, std::abs(b));
  };

  Json per_instance = Json::array();
  double worst = 0.0;
  for (const SceneRecord& rec : scene.records) {
    const VirtualRoICamera cam = build_virtual_camera(scene.camera, rec.instance.roi);
    const Pose& truth = rec.instance.pose;
    const Pose back = recover_pose(normalize_pose(truth, cam, m_i), cam, m_i);
    const double err = std::max(
        {rel(back.rotation.w, truth.rotation.w), rel(back.rotation.x, truth.rotation.x),
         rel(back.rotation.y, truth.rotation.y), rel(back.rotation.z, truth.rotation.z),
         rel(back.translation.x(), truth.translation.x()),
         rel(back.translation.y(), truth.translation.y()),
         rel(back.translation.z(), truth.translation.z())});
    worst = std::max(worst, err);
    per_instance.push_back(Json{{"id", rec.id}, {"max_error", err}});
  }

  const bool passed = worst < opt.tol;
  if (!opt.out.empty()) {
    const Json report{{"scene", opt.scene},
                      {"tolerance", opt.tol},
                      {"max_error", worst},
                      {"passed", passed},
                      {"instances", per_instance}};
    write_text(opt.out, dump_json(report));

    RunManifest manifest;
    manifest.command = "roundtrip";
    manifest.config = Json{{"scene", opt.scene}, {"tol", opt.tol}};
    manifest.inputs = {opt.scene};
    manifest.outputs = {opt.out};
    manifest.duration_seconds = watch.seconds();
    write_manifest(opt.out, manifest);
  }

  std::cout << "round trip over " << scene.records.size() << " instances: max error "
            << worst << " (tol " << opt.tol << ") " << (passed ? "OK" : "FAIL") << "\n";
  return passed ? 0 : 1;
}

struct RefineOptions {
  std::string scene;
  std::string model_override;
  double rot_deg = 5.0;
  double depth_pct = 5.0;
  std::string mode = "coords3d";
  int iters = 500;
  std::uint64_t seed = 1;
  std::string out;
  std::string out_poses;
};

int run_refine(const RefineOptions& opt) {
  Stopwatch watch;
  const SceneFile scene = scene_from_json(read_json(opt.scene));
  const Model model = resolve_model(
      opt.model_override.empty() ? scene.model_name : opt.model_override);

  RefineConfig cfg;
  cfg.max_iters = opt.iters;
  cfg.mode = opt.mode == "coords2d" ? LossMode::coords2d : LossMode::coords3d;

  Rng rng(opt.seed);
  const double angle = opt.rot_deg * std::numbers::pi / 180.0;

  Json reports = Json::array();
  SceneFile refined = scene;
  int converged_to_label = 0;
  bool traces_monotone = true;
  for (std::size_t idx = 0; idx < scene.records.size(); ++idx) {
    const SceneRecord& rec = scene.records[idx];
    const Pose& truth = rec.instance.pose;

    // Perturb: exact rot_deg rotation about a random axis, depth scaled by
    // 1 +- depth_pct/100 with random sign.
    const Vec3 axis = rng.unit_vector();
    const Quaternion spin{std::cos(0.5 * angle), std::sin(0.5 * angle) * axis.x(),
                          std::sin(0.5 * angle) * axis.y(),
                          std::sin(0.5 * angle) * axis.z()};
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    Pose init;
    init.rotation = matrix_to_quat(quat_to_matrix(spin) * quat_to_matrix(truth.rotation));
    init.translation = truth.translation;
    init.translation.z() *= 1.0 + sign * opt.depth_pct / 100.0;

    const VirtualRoICamera cam = build_virtual_camera(scene.camera, rec.instance.roi);
    const CameraIntrinsics* k = cfg.mode == LossMode::coords2d ? &cam.k_roi : nullptr;

    const RefineReport report = refine_pose(init, truth, model.cloud.points, cfg, k);
    const double final_add = add(report.pose, truth, model.cloud);
    if (final_add < 1e-3 * model.cloud.diameter) {
      ++converged_to_label;
    }
    for (std::size_t i = 1; i < report.trace.size(); ++i) {
      traces_monotone = traces_monotone && report.trace[i] <= report.trace[i - 1];
    }
    reports.push_back(refine_report_to_json(rec.id, report, final_add));
    refined.records[idx].instance.pose = report.pose;
  }

  if (!opt.out.empty()) {
    write_text(opt.out, dump_json(Json{{"mode", opt.mode}, {"reports", reports}}));
  }
  if (!opt.out_poses.empty()) {
    write_text(opt.out_poses, dump_json(scene_to_json(refined)));
  }
  if (!opt.out.empty() || !opt.out_poses.empty()) {
    RunManifest manifest;
    manifest.command = "refine";
    manifest.seed = opt.seed;
    manifest.config = Json{{"scene", opt.scene},   {"rot-deg", opt.rot_deg},
                           {"depth-pct", opt.depth_pct}, {"mode", opt.mode},
                           {"iters", opt.iters},   {"seed", opt.seed}};
    manifest.inputs = {opt.scene};
    if (!opt.out.empty()) manifest.outputs.push_back(opt.out);
    if (!opt.out_poses.empty()) manifest.outputs.push_back(opt.out_poses);
    manifest.duration_seconds = watch.seconds();
    write_manifest(opt.out.empty() ? opt.out_poses : opt.out, manifest);
  }

  std::cout << "converged " << converged_to_label << "/" << scene.records.size()
            << " (final ADD < 1e-3 * diameter); traces "
            << (traces_monotone ? "non-increasing" : "NOT MONOTONE") << "\n";
  return 0;
}

struct EvalOptions {
  std::string est;
  std::string gt;
  std::string model_override;
  double max_threshold = 0.1;
  std::string out;
};

int run_eval(const EvalOptions& opt) {
  Stopwatch watch;
  const SceneFile est = scene_from_json(read_json(opt.est));
  const SceneFile gt = scene_from_json(read_json(opt.gt));
  const Model model = resolve_model(
      opt.model_override.empty() ? gt.model_name : opt.model_override);

  std::map<int, Pose> est_poses, gt_poses;
  for (const SceneRecord& rec : est.records) {
    est_poses[rec.id] = rec.instance.pose;
  }
  for (const SceneRecord& rec : gt.records) {
    gt_poses[rec.id] = rec.instance.pose;
  }

  std::string unmatched;
  for (const auto& [id, pose] : est_poses) {
    if (!gt_poses.count(id)) {
      unmatched += " " + std::to_string(id) + "(est-only)";
    }
  }
  for (const auto& [id, pose] : gt_poses) {
    if (!est_poses.count(id)) {
      unmatched += " " + std::to_string(id) + "(gt-only)";
    }
  }
  if (!unmatched.empty()) {
    throw std::runtime_error("eval: unmatched instance ids:" + unmatched);
  }
  if (est_poses.empty()) {
    throw std::runtime_error("eval: no instances");
  }

  std::vector<EvalRow> rows;
  std::vector<double> add_errors, add_s_errors;
  double mean_add = 0.0;
  for (const auto& [id, est_pose] : est_poses) {  // std::map iterates sorted by id
    EvalRow row;
    row.instance_id = id;
    row.add = add(est_pose, gt_poses[id], model.cloud);
    row.add_s = add_s(est_pose, gt_poses[id], model.cloud);
    add_errors.push_back(row.add);
    add_s_errors.push_back(row.add_s);
    mean_add += row.add;
    rows.push_back(row);
  }
  mean_add /= static_cast<double>(rows.size());

  const double auc_add = auc_threshold(add_errors, opt.max_threshold);
  const double auc_add_s = auc_threshold(add_s_errors, opt.max_threshold);
  const std::string csv = eval_csv(rows, auc_add, auc_add_s, mean_add);

  if (opt.out.empty()) {
    std::cout << csv;
  } else {
    write_text(opt.out, csv);
    RunManifest manifest;
    manifest.command = "eval";
    manifest.config = Json{{"est", opt.est},
                           {"gt", opt.gt},
                           {"max-threshold", opt.max_threshold}};
    manifest.inputs = {opt.est, opt.gt};
    manifest.outputs = {opt.out};
    manifest.duration_seconds = watch.seconds();
    write_manifest(opt.out, manifest);
    std::cout << "auc_add " << auc_add << ", auc_add_s " << auc_add_s << ", mean_add "
              << mean_add << " -> " << opt.out << "\n";
  }
  return 0;
}

struct CheckOptions {
  std::string suite = "all";
  std::uint64_t seed = 1;
  std::string out;
  bool inject_fault = false;
};

int run_check(const CheckOptions& opt) {
  Stopwatch watch;
  const std::vector<CheckResult> results = run_checks(opt.suite, opt.seed, opt.inject_fault);

  Json report = Json::array();
  for (const CheckResult& r : results) {
    std::cout << (r.pass ? "[ OK ] " : "[FAIL] ") << r.name << ": max error "
              << r.max_error << " (tol " << r.tolerance << ")\n";
    report.push_back(Json{{"name", r.name},
                          {"max_error", r.max_error},
                          {"tolerance", r.tolerance},
                          {"pass", r.pass}});
  }

  if (!opt.out.empty()) {
    write_text(opt.out, dump_json(Json{{"suite", opt.suite},
                                       {"seed", opt.seed},
                                       {"checks", report}}));
    RunManifest manifest;
    manifest.command = "check";
    manifest.seed = opt.seed;
    manifest.config = Json{{"suite", opt.suite}, {"seed", opt.seed}};
    manifest.outputs = {opt.out};
    manifest.duration_seconds = watch.seconds();
    write_manifest(opt.out, manifest);
  }

  if (!all_passed(results)) {
    std::cerr << "check: at least one suite check failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RoI-normalized 6D pose toolkit"};
  app.set_version_flag("--version", roipose::kVersion);
  app.require_subcommand(1);

  SynthOptions synth_opt;
  CLI::App* synth = app.add_subcommand("synth", "Generate a deterministic synthetic scene");
  synth->add_option("--seed", synth_opt.seed, "PRNG seed")->capture_default_str();
  synth->add_option("--count", synth_opt.count, "Number of instances")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  synth->add_option("--model", synth_opt.model,
                    "Built-in model name (cube, box, icosahedron) or a .ply/.json path")
      ->capture_default_str();
  synth->add_option("--jitter", synth_opt.jitter, "RoI jitter fraction")
      ->check(CLI::Range(0.0, 0.3))
      ->capture_default_str();
  synth->add_option("--out", synth_opt.out, "Output scene JSON path")->required();
  synth->add_option("--fx", synth_opt.fx)->capture_default_str();
  synth->add_option("--fy", synth_opt.fy)->capture_default_str();
  synth->add_option("--px", synth_opt.px)->capture_default_str();
  synth->add_option("--py", synth_opt.py)->capture_default_str();
  synth->add_option("--width", synth_opt.width)->capture_default_str();
  synth->add_option("--height", synth_opt.height)->capture_default_str();
  synth->add_option("--dmin", synth_opt.depth_min, "Minimum depth, meters")
      ->capture_default_str();
  synth->add_option("--dmax", synth_opt.depth_max, "Maximum depth, meters")
      ->capture_default_str();

  RoundtripOptions rt_opt;
  CLI::App* roundtrip =
      app.add_subcommand("roundtrip", "Normalize and recover every pose in a scene");
  roundtrip->add_option("--scene", rt_opt.scene, "Scene JSON path")->required();
  roundtrip->add_option("--model", rt_opt.model_override,
                        "Override the model recorded in the scene");
  roundtrip->add_option("--tol", rt_opt.tol, "Per-component error tolerance")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  roundtrip->add_option("--out", rt_opt.out, "Report JSON path");

  RefineOptions refine_opt;
  CLI::App* refine =
      app.add_subcommand("refine", "Perturb ground truth and refine it back by gradient descent");
  refine->add_option("--scene", refine_opt.scene, "Scene JSON path")->required();
  refine->add_option("--model", refine_opt.model_override,
                     "Override the model recorded in the scene");
  refine->add_option("--rot-deg", refine_opt.rot_deg, "Rotation perturbation, degrees")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  refine->add_option("--depth-pct", refine_opt.depth_pct, "Depth perturbation, percent")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  refine->add_option("--mode", refine_opt.mode, "Loss mode")
      ->check(CLI::IsMember({"coords3d", "coords2d"}))
      ->capture_default_str();
  refine->add_option("--iters", refine_opt.iters, "Max iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  refine->add_option("--seed", refine_opt.seed, "Perturbation PRNG seed")
      ->capture_default_str();
  refine->add_option("--out", refine_opt.out, "Per-instance report JSON path");
  refine->add_option("--out-poses", refine_opt.out_poses,
                     "Scene JSON with the refined poses");

  EvalOptions eval_opt;
  CLI::App* eval = app.add_subcommand("eval", "ADD / ADD-S metrics between two pose files");
  eval->add_option("--est", eval_opt.est, "Estimated poses (scene JSON)")->required();
  eval->add_option("--gt", eval_opt.gt, "Ground-truth poses (scene JSON)")->required();
  eval->add_option("--model", eval_opt.model_override,
                   "Override the model recorded in the ground-truth file");
  eval->add_option("--max-threshold", eval_opt.max_threshold,
                   "AUC threshold sweep limit, meters")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eval->add_option("--out", eval_opt.out, "CSV output path (stdout when omitted)");

  CheckOptions check_opt;
  CLI::App* check = app.add_subcommand("check", "Run oracle verification suites");
  check->add_option("--suite", check_opt.suite, "Suite to run")
      ->check(CLI::IsMember({"attention", "gradients", "homography", "all"}))
      ->capture_default_str();
  check->add_option("--seed", check_opt.seed, "PRNG seed")->capture_default_str();
  check->add_option("--out", check_opt.out, "Report JSON path");
  check->add_flag("--inject-fault", check_opt.inject_fault,
                  "Corrupt the first check (harness self-test)")
      ->group("");  // hidden from help

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    std::cout << roipose::kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (synth->parsed()) return run_synth(synth_opt);
    if (roundtrip->parsed()) return run_roundtrip(rt_opt);
    if (refine->parsed()) return run_refine(refine_opt);
    if (eval->parsed()) return run_eval(eval_opt);
    if (check->parsed()) return run_check(check_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;  // unreachable with require_subcommand(1)
}
