#include "roipose/loss.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace roipose {

namespace {

constexpr double kMinProjectionDepth = 1e-9;
constexpr double kMinLineSearchStep = 1e-18;
constexpr double kMaxLineSearchStep = 1e6;

double kernel(double e) {
  const double a = std::abs(e);
  return a < 1.0 ? 0.5 * e * e : a - 0.5;
}

double kernel_grad(double e) {
  if (e > 1.0) return 1.0;
  if (e < -1.0) return -1.0;
  return e;
}

/// Partial derivatives of the unit-quaternion rotation matrix with respect
/// to each component, evaluated at unit q.
std::array<Mat3, 4> rotation_partials(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  std::array<Mat3, 4> d;
  d[0] << 0.0, -z, y,
          z, 0.0, -x,
          -y, x, 0.0;
  d[1] << 0.0, y, z,
          y, -2.0 * x, -w,
          z, w, -2.0 * x;
  d[2] << -2.0 * y, x, w,
          x, 0.0, z,
          -w, z, -2.0 * y;
  d[3] << -2.0 * z, -w, x,
          w, -2.0 * z, y,
          x, y, 0.0;
  for (Mat3& m : d) {
    m *= 2.0;
  }
  return d;
}

void require_inputs(std::span<const Vec3> pts, LossMode mode,
                    const CameraIntrinsics* k) {
  if (pts.empty()) {
    throw std::invalid_argument("coord_loss: empty point set");
  }
  if (mode == LossMode::coords2d && k == nullptr) {
    throw std::invalid_argument("coord_loss: coords2d requires camera intrinsics");
  }
}

/// Loss plus accumulated dL/dt and dL/dR for the pred side; the gradient
/// outputs may be null when only the value is needed.
double loss_and_backprop(const Pose& pred, const Pose& label,
                         std::span<const Vec3> pts, LossMode mode,
                         const CameraIntrinsics* k, Vec3* d_t, Mat3* d_r) {
  const Mat3 r_pred = quat_to_matrix(pred.rotation);
  const Mat3 r_label = quat_to_matrix(label.rotation);
  if (d_t) d_t->setZero();
  if (d_r) d_r->setZero();

  const std::size_t per_point = mode == LossMode::coords3d ? 3 : 2;
  const double scale = 1.0 / static_cast<double>(per_point * pts.size());

  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 a = r_pred * pts[i] + pred.translation;
    const Vec3 b = r_label * pts[i] + label.translation;

    if (mode == LossMode::coords3d) {
      const Vec3 e = a - b;
      Vec3 de;
      for (int c = 0; c < 3; ++c) {
        total += kernel(e[c]);
        de[c] = kernel_grad(e[c]) * scale;
      }
      if (d_t) *d_t += de;
      if (d_r) *d_r += de * pts[i].transpose();
    } else {
      if (a.z() <= kMinProjectionDepth || b.z() <= kMinProjectionDepth) {
        throw std::domain_error("coord_loss: point " + std::to_string(i) +
                                " projects at or behind the camera plane");
      }
      const Vec2 pa{k->fx * a.x() / a.z() + k->px, k->fy * a.y() / a.z() + k->py};
      const Vec2 pb{k->fx * b.x() / b.z() + k->px, k->fy * b.y() / b.z() + k->py};
      const Vec2 e = pa - pb;
      total += kernel(e.x()) + kernel(e.y());

      if (d_t || d_r) {
        const double gu = kernel_grad(e.x()) * scale;
        const double gv = kernel_grad(e.y()) * scale;
        // Pinhole Jacobian transposed, applied to the kernel gradient.
        const Vec3 da{k->fx / a.z() * gu,
                      k->fy / a.z() * gv,
                      -(k->fx * a.x() * gu + k->fy * a.y() * gv) / (a.z() * a.z())};
        if (d_t) *d_t += da;
        if (d_r) *d_r += da * pts[i].transpose();
      }
    }
  }
  return total * scale;
}

/// Projects dL/dR into the raw quaternion 4-vector through the
/// normalization chain q = q_raw / |q_raw|.
Eigen::Vector4d rotation_gradient(const Quaternion& q_raw, const Mat3& d_r) {
  const double n = q_raw.norm();
  const Quaternion q{q_raw.w / n, q_raw.x / n, q_raw.y / n, q_raw.z / n};
  const std::array<Mat3, 4> partials = rotation_partials(q);

  Eigen::Vector4d d_unit;
  for (int m = 0; m < 4; ++m) {
    d_unit[m] = (d_r.array() * partials[m].array()).sum();
  }
  const Eigen::Vector4d qv{q.w, q.x, q.y, q.z};
  return (d_unit - qv * qv.dot(d_unit)) / n;
}

}  // namespace

double smooth_l1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size()) {
    throw std::invalid_argument("smooth_l1: sequences must be nonempty and of equal length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += kernel(a[i] - b[i]);
  }
  return total / static_cast<double>(a.size());
}

double coord_loss(const Pose& pred, const Pose& label, std::span<const Vec3> pts,
                  LossMode mode, const CameraIntrinsics* k) {
  require_inputs(pts, mode, k);
  return loss_and_backprop(pred, label, pts, mode, k, nullptr, nullptr);
}

PoseGradient coord_loss_grad(const Pose& pred, const Pose& label,
                             std::span<const Vec3> pts, LossMode mode,
                             const CameraIntrinsics* k) {
  require_inputs(pts, mode, k);
  Vec3 d_t;
  Mat3 d_r;
  loss_and_backprop(pred, label, pts, mode, k, &d_t, &d_r);

  PoseGradient grad;
  grad.d_translation = d_t;
  grad.d_rotation = rotation_gradient(pred.rotation, d_r);
  return grad;
}

RefineReport refine_pose(const Pose& init, const Pose& label,
                         std::span<const Vec3> pts, const RefineConfig& cfg,
                         const CameraIntrinsics* k) {
  if (cfg.max_iters < 1 || !(cfg.step0 > 0.0) ||
      !(cfg.backtrack > 0.0 && cfg.backtrack < 1.0) || !(cfg.grad_tol >= 0.0)) {
    throw std::invalid_argument("refine_pose: invalid configuration");
  }
  require_inputs(pts, cfg.mode, k);

  Pose current{init.rotation.normalized(), init.translation};
  double loss = coord_loss(current, label, pts, cfg.mode, k);

  RefineReport report;
  report.trace.push_back(loss);

  double step = cfg.step0;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    const PoseGradient grad = coord_loss_grad(current, label, pts, cfg.mode, k);
    const double grad_norm = std::sqrt(grad.d_rotation.squaredNorm() +
                                       grad.d_translation.squaredNorm());
    if (grad_norm <= cfg.grad_tol) {
      report.converged = true;
      break;
    }

    bool accepted = false;
    while (step >= kMinLineSearchStep) {
      Pose candidate;
      candidate.rotation = Quaternion{current.rotation.w - step * grad.d_rotation[0],
                                      current.rotation.x - step * grad.d_rotation[1],
                                      current.rotation.y - step * grad.d_rotation[2],
                                      current.rotation.z - step * grad.d_rotation[3]}
                               .normalized();
      candidate.translation = current.translation - step * grad.d_translation;

      const double candidate_loss = coord_loss(candidate, label, pts, cfg.mode, k);
      if (candidate_loss < loss) {
        current = candidate;
        loss = candidate_loss;
        report.trace.push_back(loss);
        report.iterations = iter;
        step = std::min(step / cfg.backtrack, kMaxLineSearchStep);
        accepted = true;
        break;
      }
      step *= cfg.backtrack;
    }
    if (!accepted) {
      break;  // no decreasing step exists at this point
    }
  }

  report.pose = current;
  report.loss = loss;
  return report;
}

}  // namespace roipose
