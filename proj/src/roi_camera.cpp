#include "roipose/roi_camera.hpp"

#include <cmath>
#include <stdexcept>

namespace roipose {

namespace {

constexpr double kMinRayZ = 1e-9;
constexpr double kMaxDepthCode = 700.0;  // exp overflows past this

void require_positive_extent(const Rect2D& r, const char* what) {
  if (!(r.w > 0.0) || !(r.h > 0.0)) {
    throw std::invalid_argument(std::string(what) + ": rectangle extent must be positive");
  }
}

}  // namespace

CameraIntrinsics virtual_intrinsics(const CameraIntrinsics& k_c, const Rect2D& roi) {
  require_positive_extent(roi, "virtual_intrinsics");
  return CameraIntrinsics{k_c.fx / roi.w, k_c.fy / roi.h, 0.5, 0.5};
}

Vec3 roi_axis(const CameraIntrinsics& k_c, const Rect2D& roi) {
  require_positive_extent(roi, "roi_axis");
  const Vec2 c = roi.center();
  const Vec3 ray{(c.x() - k_c.px) / k_c.fx, (c.y() - k_c.py) / k_c.fy, 1.0};
  return ray / ray.norm();
}

VirtualRoICamera build_virtual_camera(const CameraIntrinsics& k_c, const Rect2D& roi) {
  const Vec3 c_roi = roi_axis(k_c, roi);
  // c_roi has z > 0, so it is never antipodal to the principal axis.
  const Mat3 r_roi = rodrigues_between(c_roi, Vec3{0.0, 0.0, 1.0});
  return VirtualRoICamera{virtual_intrinsics(k_c, roi), r_roi, roi};
}

Mat3 infinite_homography(const VirtualRoICamera& cam, const CameraIntrinsics& k_c) {
  Mat3 h = cam.k_roi.matrix() * cam.r_roi * k_c.inverse_matrix();
  // Representative scaled so the RoI center maps with third component 1.
  const Vec2 c = cam.roi.center();
  const double s = (h * Vec3{c.x(), c.y(), 1.0}).z();
  return h / s;
}

NormalizedBox normalize_bbox(const Rect2D& obj, const Rect2D& roi) {
  require_positive_extent(obj, "normalize_bbox");
  require_positive_extent(roi, "normalize_bbox");
  return NormalizedBox{(obj.x - roi.x) / roi.w, (obj.y - roi.y) / roi.h,
                       std::log(obj.w / roi.w), std::log(obj.h / roi.h)};
}

Rect2D recover_bbox(const NormalizedBox& nb, const Rect2D& roi) {
  require_positive_extent(roi, "recover_bbox");
  return Rect2D{roi.x + nb.t_x * roi.w, roi.y + nb.t_y * roi.h,
                std::exp(nb.t_w) * roi.w, std::exp(nb.t_h) * roi.h};
}

double identity_area(const CameraIntrinsics& k_c, std::span<const Vec3> model_corners) {
  if (model_corners.empty()) {
    throw std::invalid_argument("identity_area: no model corners");
  }
  const Pose canonical{Quaternion{}, Vec3{0.0, 0.0, 1.0}};
  const std::vector<Vec2> projected = project_points(k_c, canonical, model_corners);
  return bbox2d_of(projected).area();
}

NormalizedPose normalize_pose(const Pose& pose, const VirtualRoICamera& cam,
                              double m_i) {
  const double d = pose.translation.z();
  if (!(d > 0.0)) {
    throw std::invalid_argument("normalize_pose: pose depth must be positive");
  }
  if (!(m_i > 0.0)) {
    throw std::invalid_argument("normalize_pose: identity-mapping area must be positive");
  }
  require_positive_extent(cam.roi, "normalize_pose");

  NormalizedPose np;
  np.q_obj = matrix_to_quat(cam.r_roi * quat_to_matrix(pose.rotation));

  // Homogeneous ray through the object center, rotated into the RoI view.
  const Vec3 ray{pose.translation.x() / d, pose.translation.y() / d, 1.0};
  const Vec3 v = cam.r_roi * ray;
  if (v.z() <= kMinRayZ) {
    throw std::domain_error("normalize_pose: object ray behind the virtual camera");
  }
  np.x_obj = v.x() / v.z();
  np.y_obj = v.y() / v.z();

  np.d_obj = std::log(cam.roi.area() / (m_i * d));
  return np;
}

Pose recover_pose(const NormalizedPose& np, const VirtualRoICamera& cam,
                  double m_i) {
  if (!std::isfinite(np.x_obj) || !std::isfinite(np.y_obj) ||
      !std::isfinite(np.d_obj)) {
    throw std::invalid_argument("recover_pose: non-finite normalized pose");
  }
  if (!(m_i > 0.0)) {
    throw std::invalid_argument("recover_pose: identity-mapping area must be positive");
  }
  if (std::abs(np.d_obj) > kMaxDepthCode) {
    throw std::range_error("recover_pose: |d_obj| > 700 overflows exp");
  }
  require_positive_extent(cam.roi, "recover_pose");

  const Mat3 r_roi_inv = cam.r_roi.transpose();

  Pose pose;
  pose.rotation = matrix_to_quat(r_roi_inv * quat_to_matrix(np.q_obj));

  const double d = cam.roi.area() / (m_i * std::exp(np.d_obj));

  Vec3 ray = r_roi_inv * Vec3{np.x_obj, np.y_obj, 1.0};
  if (ray.z() <= kMinRayZ) {
    throw std::domain_error("recover_pose: recovered ray behind the camera");
  }
  ray /= ray.z();
  pose.translation = Vec3{ray.x() * d, ray.y() * d, d};
  return pose;
}

}  // namespace roipose
