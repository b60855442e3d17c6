#include "roipose/verify.hpp"

#include "roipose/loss.hpp"
#include "roipose/nonlocal.hpp"
#include "roipose/roi_camera.hpp"
#include "roipose/rng.hpp"
#include "roipose/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace roipose {

namespace {

FeatureMap random_feature_map(int c, int h, int w, Rng& rng) {
  FeatureMap fm = FeatureMap::zeros(c, h, w);
  for (double& v : fm.data) {
    v = rng.gaussian();
  }
  return fm;
}

double max_abs_diff(const FeatureMap& a, const FeatureMap& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

CheckResult bruteforce_equivalence(Rng& rng) {
  double worst = 0.0;
  for (int c : {1, 2, 4, 8}) {
    for (int h : {1, 2, 3, 5}) {
      for (int w : {1, 2, 3, 5}) {
        for (int trial = 0; trial < 10; ++trial) {
          const FeatureMap x = random_feature_map(c, h, w, rng);
          const NonLocalParams p = NonLocalParams::random(c, rng);
          worst = std::max(
              worst, max_abs_diff(nonlocal_forward(x, p), nonlocal_bruteforce(x, p)));
        }
      }
    }
  }
  return CheckResult{"attention/bruteforce-equivalence", worst, 1e-10, worst < 1e-10};
}

CheckResult uniform_attention(Rng& rng) {
  // Zero theta/phi give constant logits: every position must receive the
  // identical mean of g over positions.
  const int c = 4, h = 3, w = 3;
  const FeatureMap x = random_feature_map(c, h, w, rng);
  NonLocalParams p = NonLocalParams::random(c, rng);
  p.w_theta.setZero();
  p.w_phi.setZero();

  const FeatureMap z = nonlocal_forward(x, p);
  const int n = h * w;
  const int cp = NonLocalParams::bottleneck(c);

  double worst = 0.0;
  // y recovered from the residual must not vary across positions.
  std::vector<double> y0(static_cast<std::size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    y0[ch] = z.data[static_cast<std::size_t>(ch) * n] - x.data[static_cast<std::size_t>(ch) * n];
    for (int i = 1; i < n; ++i) {
      const double yi = z.data[static_cast<std::size_t>(ch) * n + i] -
                        x.data[static_cast<std::size_t>(ch) * n + i];
      worst = std::max(worst, std::abs(yi - y0[ch]));
    }
  }

  // Independent mean: y = W_z * mean_j g(x_j).
  Eigen::VectorXd mean_g = Eigen::VectorXd::Zero(cp);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xi(c);
    for (int ch = 0; ch < c; ++ch) {
      xi[ch] = x.data[static_cast<std::size_t>(ch) * n + i];
    }
    mean_g += p.w_g * xi;
  }
  mean_g /= static_cast<double>(n);
  const Eigen::VectorXd expected = p.w_z * mean_g;
  for (int ch = 0; ch < c; ++ch) {
    worst = std::max(worst, std::abs(expected[ch] - y0[ch]));
  }
  return CheckResult{"attention/uniform-attention", worst, 1e-13, worst < 1e-13};
}

CheckResult residual_identity(Rng& rng) {
  const FeatureMap x = random_feature_map(3, 2, 5, rng);
  NonLocalParams p = NonLocalParams::random(3, rng);
  p.w_z.setZero();
  const double worst = max_abs_diff(nonlocal_forward(x, p), x);
  return CheckResult{"attention/residual-identity", worst, 0.0, worst == 0.0};
}

CheckResult permutation_equivariance(Rng& rng) {
  const int c = 4, h = 2, w = 3;
  const int n = h * w;
  const FeatureMap x = random_feature_map(c, h, w, rng);
  const NonLocalParams p = NonLocalParams::random(c, rng);

  // Reverse the spatial positions.
  FeatureMap xp = x;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < n; ++i) {
      xp.data[static_cast<std::size_t>(ch) * n + i] =
          x.data[static_cast<std::size_t>(ch) * n + (n - 1 - i)];
    }
  }

  const FeatureMap z = nonlocal_forward(x, p);
  const FeatureMap zp = nonlocal_forward(xp, p);
  double worst = 0.0;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < n; ++i) {
      worst = std::max(worst,
                       std::abs(zp.data[static_cast<std::size_t>(ch) * n + i] -
                                z.data[static_cast<std::size_t>(ch) * n + (n - 1 - i)]));
    }
  }
  return CheckResult{"attention/permutation-equivariance", worst, 1e-12, worst < 1e-12};
}

/// Central-difference gradient of coord_loss in the 7 pose parameters.
void numeric_pose_gradient(const Pose& pred, const Pose& label,
                           std::span<const Vec3> pts, LossMode mode,
                           const CameraIntrinsics* k, double step,
                           Eigen::Vector4d* dq, Vec3* dt) {
  const auto eval = [&](const Pose& p) { return coord_loss(p, label, pts, mode, k); };
  for (int i = 0; i < 4; ++i) {
    Pose up = pred, down = pred;
    double* fields_up[] = {&up.rotation.w, &up.rotation.x, &up.rotation.y, &up.rotation.z};
    double* fields_down[] = {&down.rotation.w, &down.rotation.x, &down.rotation.y,
                             &down.rotation.z};
    *fields_up[i] += step;
    *fields_down[i] -= step;
    (*dq)[i] = (eval(up) - eval(down)) / (2.0 * step);
  }
  for (int i = 0; i < 3; ++i) {
    Pose up = pred, down = pred;
    up.translation[i] += step;
    down.translation[i] -= step;
    (*dt)[i] = (eval(up) - eval(down)) / (2.0 * step);
  }
}

double coord_loss_grad_error(LossMode mode, Rng& rng, int trials) {
  const CameraIntrinsics k{4.0, 4.0, 0.5, 0.5};
  const CameraIntrinsics* kp = mode == LossMode::coords2d ? &k : nullptr;
  constexpr double step = 1e-6;

  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 8; ++i) {
      pts.emplace_back(rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4),
                       rng.uniform(-0.4, 0.4));
    }
    Pose label{rng.unit_quaternion(),
               Vec3{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(1.5, 2.5)}};

    // Small perturbation keeps every residual away from the |e| = 1 kink.
    const Vec3 axis = rng.unit_vector();
    const double angle = rng.uniform(0.01, 0.06);
    const Quaternion dq{std::cos(0.5 * angle), std::sin(0.5 * angle) * axis.x(),
                        std::sin(0.5 * angle) * axis.y(), std::sin(0.5 * angle) * axis.z()};
    const Mat3 r_pred = quat_to_matrix(dq) * quat_to_matrix(label.rotation);
    Pose pred{matrix_to_quat(r_pred),
              label.translation + Vec3{rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03),
                                       rng.uniform(-0.03, 0.03)}};

    const PoseGradient analytic = coord_loss_grad(pred, label, pts, mode, kp);
    Eigen::Vector4d nq;
    Vec3 nt;
    numeric_pose_gradient(pred, label, pts, mode, kp, step, &nq, &nt);

    const auto rel = [](double a, double n) {
      return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    };
    for (int i = 0; i < 4; ++i) {
      worst = std::max(worst, rel(analytic.d_rotation[i], nq[i]));
    }
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, rel(analytic.d_translation[i], nt[i]));
    }
  }
  return worst;
}

CheckResult nonlocal_gradient_check(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const FeatureMap x = random_feature_map(4, 3, 3, rng);
    const NonLocalParams p = NonLocalParams::random(4, rng);
    worst = std::max(worst, nonlocal_grad_check(x, p, 1e-5));
  }
  return CheckResult{"gradients/nonlocal", worst, 1e-4, worst < 1e-4};
}

CheckResult quaternion_gradient_orthogonality(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 6; ++i) {
      pts.emplace_back(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                       rng.uniform(-0.5, 0.5));
    }
    const Pose label{rng.unit_quaternion(), Vec3{0.05, -0.02, 1.7}};
    const Pose pred{rng.unit_quaternion(), Vec3{0.0, 0.0, 1.6}};
    const PoseGradient g = coord_loss_grad(pred, label, pts, LossMode::coords3d);
    const Eigen::Vector4d q{pred.rotation.w, pred.rotation.x, pred.rotation.y,
                            pred.rotation.z};
    worst = std::max(worst, std::abs(g.d_rotation.dot(q)));
  }
  return CheckResult{"gradients/quaternion-orthogonality", worst, 1e-10, worst < 1e-10};
}

CheckResult homography_anchor(Rng& rng) {
  const CameraIntrinsics k{520.0, 480.0, 310.0, 255.0};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Rect2D roi{rng.uniform(0.0, 560.0), rng.uniform(0.0, 400.0),
                     rng.uniform(4.0, 200.0), rng.uniform(4.0, 150.0)};
    const VirtualRoICamera cam = build_virtual_camera(k, roi);
    const Mat3 h = infinite_homography(cam, k);
    const Vec2 c = roi.center();
    const Vec3 mapped = h * Vec3{c.x(), c.y(), 1.0};
    worst = std::max({worst, std::abs(mapped.x() / mapped.z() - 0.5),
                      std::abs(mapped.y() / mapped.z() - 0.5)});
  }
  return CheckResult{"homography/center-anchor", worst, 1e-12, worst < 1e-12};
}

CheckResult principal_point_identity() {
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0};
  const Rect2D roi{320.0 - 40.0, 240.0 - 25.0, 80.0, 50.0};  // centered on (px, py)
  const VirtualRoICamera cam = build_virtual_camera(k, roi);
  const double worst = (cam.r_roi - Mat3::Identity()).cwiseAbs().maxCoeff();
  return CheckResult{"homography/principal-point-identity", worst, 0.0, worst == 0.0};
}

CheckResult pose_roundtrip(Rng& rng) {
  const Model model = builtin_model("cube");
  SynthConfig cfg;
  cfg.seed = rng.next_u64();
  cfg.count = 500;
  const double m_i = identity_area(cfg.camera, model.bbox_corners);

  double worst = 0.0;
  for (const SceneInstance& inst : sample_scene(cfg, model)) {
    const VirtualRoICamera cam = build_virtual_camera(cfg.camera, inst.roi);
    const Pose recovered = recover_pose(normalize_pose(inst.pose, cam, m_i), cam, m_i);
    const auto rel = [](double a, double b) {
      return std::abs(a - b) / std::max(1.0, std::abs(b));
    };
    worst = std::max({worst, rel(recovered.rotation.w, inst.pose.rotation.w),
                      rel(recovered.rotation.x, inst.pose.rotation.x),
                      rel(recovered.rotation.y, inst.pose.rotation.y),
                      rel(recovered.rotation.z, inst.pose.rotation.z),
                      rel(recovered.translation.x(), inst.pose.translation.x()),
                      rel(recovered.translation.y(), inst.pose.translation.y()),
                      rel(recovered.translation.z(), inst.pose.translation.z())});
  }
  return CheckResult{"homography/pose-roundtrip", worst, 1e-9, worst < 1e-9};
}

CheckResult depth_code_identity() {
  const CameraIntrinsics k{500.0, 500.0, 320.0, 240.0};
  const Model model = builtin_model("cube");
  const double m_i = identity_area(k, model.bbox_corners);

  // An RoI whose pixel area equals m_I, centered at the principal point,
  // holding an object at depth exactly 1, must code to d_obj = 0.
  const double side = std::sqrt(m_i);
  const Rect2D roi{320.0 - 0.5 * side, 240.0 - 0.5 * side, side, side};
  const VirtualRoICamera cam = build_virtual_camera(k, roi);
  const Pose pose{Quaternion{}, Vec3{0.0, 0.0, 1.0}};
  double worst = std::abs(normalize_pose(pose, cam, m_i).d_obj);

  // d_obj strictly decreasing in depth over a 100-point sweep.
  double previous = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 100; ++i) {
    const double depth = 0.1 + 0.05 * i;
    const NormalizedPose np =
        normalize_pose(Pose{Quaternion{}, Vec3{0.0, 0.0, depth}}, cam, m_i);
    if (!(np.d_obj < previous)) {
      worst = std::max(worst, 1.0);  // monotonicity violation
    }
    previous = np.d_obj;
  }
  return CheckResult{"homography/depth-code-identity", worst, 0.0, worst == 0.0};
}

}  // namespace

std::vector<CheckResult> check_attention(std::uint64_t seed) {
  Rng rng(seed);
  return {bruteforce_equivalence(rng), uniform_attention(rng),
          residual_identity(rng), permutation_equivariance(rng)};
}

std::vector<CheckResult> check_gradients(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CheckResult> results;
  results.push_back(nonlocal_gradient_check(rng));
  const double e3d = coord_loss_grad_error(LossMode::coords3d, rng, 20);
  results.push_back(CheckResult{"gradients/coord-loss-3d", e3d, 1e-4, e3d < 1e-4});
  const double e2d = coord_loss_grad_error(LossMode::coords2d, rng, 20);
  results.push_back(CheckResult{"gradients/coord-loss-2d", e2d, 1e-4, e2d < 1e-4});
  results.push_back(quaternion_gradient_orthogonality(rng));
  return results;
}

std::vector<CheckResult> check_homography(std::uint64_t seed) {
  Rng rng(seed);
  return {homography_anchor(rng), principal_point_identity(), pose_roundtrip(rng),
          depth_code_identity()};
}

std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed,
                                    bool inject_fault) {
  std::vector<CheckResult> results;
  const auto append = [&](std::vector<CheckResult> more) {
    results.insert(results.end(), more.begin(), more.end());
  };
  if (suite == "attention" || suite == "all") {
    append(check_attention(seed));
  }
  if (suite == "gradients" || suite == "all") {
    append(check_gradients(seed));
  }
  if (suite == "homography" || suite == "all") {
    append(check_homography(seed));
  }
  if (results.empty()) {
    throw std::invalid_argument("run_checks: unknown suite '" + suite + "'");
  }
  if (inject_fault) {
    results.front().max_error = results.front().tolerance + 1.0;
    results.front().pass = false;
  }
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

}  // namespace roipose
