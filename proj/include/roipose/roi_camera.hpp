#pragma once

#include "roipose/geometry.hpp"

namespace roipose {

/// Virtual pinhole camera attached to an RoI. Its principal axis passes
/// through the RoI center, and its intrinsics map the RoI content to the
/// unit square, so the RoI center lands on (0.5, 0.5).
struct VirtualRoICamera {
  CameraIntrinsics k_roi;  // normalized units, principal point exactly (0.5, 0.5)
  Mat3 r_roi;              // maps the RoI center ray onto the principal axis (0,0,1)
  Rect2D roi;              // the proposal rectangle, image pixels
};

/// Pose target in the virtual RoI frame: rotation as a unit quaternion,
/// translation as ray coordinates plus a log-depth code.
struct NormalizedPose {
  Quaternion q_obj;
  double x_obj = 0.0;  // rotated ray, dehomogenized
  double y_obj = 0.0;
  double d_obj = 0.0;  // log(m_roi / (m_i * d))
};

/// Detector-style box target relative to an RoI.
struct NormalizedBox {
  double t_x = 0.0;
  double t_y = 0.0;
  double t_w = 0.0;
  double t_h = 0.0;
};

/// Intrinsics of the virtual RoI camera: (fx/r_w, fy/r_h, 0.5, 0.5).
/// Throws std::invalid_argument on non-positive RoI extent.
CameraIntrinsics virtual_intrinsics(const CameraIntrinsics& k_c, const Rect2D& roi);

/// Unit ray through the RoI center pixel: normalize(K_c^-1 * (cx, cy, 1)).
/// Always has positive z.
Vec3 roi_axis(const CameraIntrinsics& k_c, const Rect2D& roi);

/// Assembles the virtual camera for an RoI. r_roi rotates the RoI center
/// ray onto (0,0,1); an RoI centered at the principal point yields the
/// identity exactly.
VirtualRoICamera build_virtual_camera(const CameraIntrinsics& k_c, const Rect2D& roi);

/// Infinite homography from image pixels to virtual RoI coordinates,
/// H = K_roi * R_roi * K_c^-1, scaled so the RoI center maps with third
/// homogeneous component 1. Dehomogenized, the RoI center lands on
/// (0.5, 0.5).
Mat3 infinite_homography(const VirtualRoICamera& cam, const CameraIntrinsics& k_c);

/// Box normalization:
///   t_x = (x - x_a)/r_w, t_y = (y - y_a)/r_h,
///   t_w = log(w/r_w),    t_h = log(h/r_h).
NormalizedBox normalize_bbox(const Rect2D& obj, const Rect2D& roi);

/// Exact inverse of normalize_bbox.
Rect2D recover_bbox(const NormalizedBox& nb, const Rect2D& roi);

/// Area m_I in pixels^2 of the 2D bounding box of the model corners
/// projected at the canonical pose (identity rotation, translation
/// (0,0,1)). Degenerate projections propagate as errors.
double identity_area(const CameraIntrinsics& k_c, std::span<const Vec3> model_corners);

/// RoI-frame normalization of a camera-frame pose:
///   q_obj       = matrix_to_quat(R_roi * R_label)
///   (x_obj, y_obj) = dehomogenize(R_roi * (X/d, Y/d, 1))
///   d_obj       = log(m_roi / (m_i * d)),  m_roi = roi.w * roi.h
/// Throws std::invalid_argument when d <= 0 and std::domain_error when the
/// rotated ray has z <= 1e-9 (behind the virtual camera).
NormalizedPose normalize_pose(const Pose& pose, const VirtualRoICamera& cam,
                              double m_i);

/// Exact inverse of normalize_pose:
///   R_out = R_roi^-1 * R(q_obj),  d = m_roi / (m_i * exp(d_obj)),
///   ray   = R_roi^-1 * (x_obj, y_obj, 1) rescaled to third component 1,
///   t     = (ray.x * d, ray.y * d, d).
/// Throws std::range_error when |d_obj| > 700 (exp overflow).
Pose recover_pose(const NormalizedPose& np, const VirtualRoICamera& cam,
                  double m_i);

}  // namespace roipose
