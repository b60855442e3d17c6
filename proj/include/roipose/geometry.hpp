#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace roipose {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Rotation quaternion, scalar-first (w, x, y, z).
///
/// Library factories (matrix_to_quat, Rng::unit_quaternion, the JSON
/// readers) always return unit quaternions in canonical sign: w >= 0,
/// and when w == 0 the first nonzero of x, y, z is >= 0. Canonical sign
/// makes round trips and serialization deterministic.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;

  /// Unit-norm copy in canonical sign.
  /// Throws std::domain_error when the norm is below 1e-12.
  Quaternion normalized() const;

  Quaternion conjugate() const { return {w, -x, -y, -z}; }
};

/// Rigid transform: rotation plus translation in meters.
/// translation.z() is the depth along the camera principal axis.
struct Pose {
  Quaternion rotation;
  Vec3 translation = Vec3::Zero();

  /// Homogeneous 4x4 form [R t; 0 1].
  Mat4 matrix() const;
};

/// Pinhole parameters. Pixels for real cameras; a virtual RoI camera
/// uses normalized units with principal point (0.5, 0.5).
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double px = 0.0;
  double py = 0.0;

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;
};

/// Axis-aligned rectangle, top-left anchored, positive extent.
struct Rect2D {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Vec2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }
  double area() const { return w * h; }
};

/// True when r is orthonormal with determinant 1 within tol.
bool is_rotation(const Mat3& r, double tol = 1e-10);

/// Rotation matrix of q. Normalizes internally, so q and -q map to the
/// same matrix bit for bit. Throws std::domain_error when |q| < 1e-12.
Mat3 quat_to_matrix(const Quaternion& q);

/// Inverse of quat_to_matrix, canonical sign. Throws
/// std::invalid_argument when r is not orthonormal within 1e-8.
Quaternion matrix_to_quat(const Mat3& r);

/// Rotation taking unit vector a onto unit vector b:
/// R = I + [v]x + [v]x^2 / (1 + a.b) with v = a x b.
/// Throws std::invalid_argument when a or b is not unit within 1e-9 and
/// std::domain_error when the pair is antipodal (a.b <= -1 + 1e-9), where
/// the rotation axis is undefined.
Mat3 rodrigues_between(const Vec3& a, const Vec3& b);

/// R*p + t for every point. Inputs are never mutated.
std::vector<Vec3> transform_points(const Pose& t, std::span<const Vec3> pts);

/// Pinhole projection u = fx*X/Z + px, v = fy*Y/Z + py of the transformed
/// points. Throws std::domain_error naming the first point whose depth
/// after transformation is <= 1e-9.
std::vector<Vec2> project_points(const CameraIntrinsics& k, const Pose& t,
                                 std::span<const Vec3> pts);

/// Tightest axis-aligned rectangle containing all points. Throws
/// std::invalid_argument on empty input and std::domain_error when the
/// points have zero extent in either dimension.
Rect2D bbox2d_of(std::span<const Vec2> pts);

}  // namespace roipose
