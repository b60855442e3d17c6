#pragma once

#include "roipose/geometry.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace roipose {

/// Where the coordinate loss is evaluated: on rigidly transformed 3D
/// points, or on their 2D projections through a supplied camera.
enum class LossMode { coords3d, coords2d };

struct RefineConfig {
  int max_iters = 500;
  double step0 = 1e-2;
  double backtrack = 0.5;   // line-search shrink factor, in (0, 1)
  double grad_tol = 1e-10;
  LossMode mode = LossMode::coords3d;
};

struct RefineReport {
  Pose pose;
  double loss = 0.0;
  int iterations = 0;
  std::vector<double> trace;  // loss after each accepted step, non-increasing
  bool converged = false;     // gradient norm reached grad_tol
};

/// Gradient of the coordinate loss in pose parameters. d_rotation is taken
/// with respect to the raw (unnormalized) quaternion 4-vector, with the
/// normalization inside the chain, so it is orthogonal to q itself.
struct PoseGradient {
  Eigen::Vector4d d_rotation = Eigen::Vector4d::Zero();  // (w, x, y, z)
  Vec3 d_translation = Vec3::Zero();
};

/// Mean over elements of the smooth-L1 kernel of a - b:
/// 0.5 e^2 for |e| < 1, |e| - 0.5 otherwise.
double smooth_l1(std::span<const double> a, std::span<const double> b);

/// Smooth-L1 loss between the model points under pred and under label.
/// coords3d compares the transformed 3D coordinates; coords2d compares
/// their projections through k (required, and all depths must be > 1e-9).
double coord_loss(const Pose& pred, const Pose& label, std::span<const Vec3> pts,
                  LossMode mode, const CameraIntrinsics* k = nullptr);

/// Analytic gradient of coord_loss with respect to pred.
PoseGradient coord_loss_grad(const Pose& pred, const Pose& label,
                             std::span<const Vec3> pts, LossMode mode,
                             const CameraIntrinsics* k = nullptr);

/// Deterministic gradient descent on (q, t) with a backtracking line
/// search warm-started from the last accepted step. Every accepted step
/// strictly decreases the loss; terminates on grad_tol, max_iters, or when
/// no decreasing step exists. The quaternion is updated additively and
/// renormalized after each step.
RefineReport refine_pose(const Pose& init, const Pose& label,
                         std::span<const Vec3> pts, const RefineConfig& cfg,
                         const CameraIntrinsics* k = nullptr);

}  // namespace roipose
