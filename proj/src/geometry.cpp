#include "roipose/geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace roipose {

namespace {

constexpr double kDegenerateQuatNorm = 1e-12;
constexpr double kOrthonormalTol = 1e-8;
constexpr double kUnitVectorTol = 1e-9;
constexpr double kAntipodalTol = 1e-9;
constexpr double kMinProjectionDepth = 1e-9;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

void require_valid_intrinsics(const CameraIntrinsics& k) {
  if (!(k.fx > 0.0) || !(k.fy > 0.0)) {
    throw std::invalid_argument("camera intrinsics require fx > 0 and fy > 0");
  }
}

}  // namespace

double Quaternion::norm() const {
  return std::sqrt(w * w + x * x + y * y + z * z);
}

Quaternion Quaternion::normalized() const {
  const double n = norm();
  if (n < kDegenerateQuatNorm) {
    throw std::domain_error("quaternion norm below 1e-12, rotation undefined");
  }
  Quaternion q{w / n, x / n, y / n, z / n};
  // Canonical sign: w >= 0; on the w = 0 great circle the first nonzero
  // of x, y, z decides.
  bool flip = q.w < 0.0;
  if (q.w == 0.0) {
    if (q.x != 0.0) {
      flip = q.x < 0.0;
    } else if (q.y != 0.0) {
      flip = q.y < 0.0;
    } else {
      flip = q.z < 0.0;
    }
    q.w = 0.0;  // never -0
  }
  if (flip) {
    q = {-q.w, -q.x, -q.y, -q.z};
  }
  return q;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = quat_to_matrix(rotation);
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx, 0.0, px,
       0.0, fy, py,
       0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx, 0.0, -px / fx,
       0.0, 1.0 / fy, -py / fy,
       0.0, 0.0, 1.0;
  return k;
}

bool is_rotation(const Mat3& r, double tol) {
  const Mat3 rtr = r.transpose() * r;
  return (rtr - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 quat_to_matrix(const Quaternion& q) {
  const double n = q.norm();
  if (n < kDegenerateQuatNorm) {
    throw std::domain_error("quaternion norm below 1e-12, rotation undefined");
  }
  const double w = q.w / n, x = q.x / n, y = q.y / n, z = q.z / n;

  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, xz = x * z, yz = y * z;
  const double wx = w * x, wy = w * y, wz = w * z;

  Mat3 r;
  r << 1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),
       2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
       2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy);
  return r;
}

Quaternion matrix_to_quat(const Mat3& r) {
  if (!is_rotation(r, kOrthonormalTol)) {
    throw std::invalid_argument(
        "matrix_to_quat: input is not orthonormal with det 1 within 1e-8");
  }

  // Shepperd's method: pick the largest of w, x, y, z as pivot.
  Quaternion q;
  const double tr = r(0, 0) + r(1, 1) + r(2, 2);
  if (tr > 0.0) {
    const double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (r(2, 1) - r(1, 2)) / s;
    q.y = (r(0, 2) - r(2, 0)) / s;
    q.z = (r(1, 0) - r(0, 1)) / s;
  } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
    q.w = (r(2, 1) - r(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (r(0, 1) + r(1, 0)) / s;
    q.z = (r(0, 2) + r(2, 0)) / s;
  } else if (r(1, 1) > r(2, 2)) {
    const double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
    q.w = (r(0, 2) - r(2, 0)) / s;
    q.x = (r(0, 1) + r(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (r(1, 2) + r(2, 1)) / s;
  } else {
    const double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
    q.w = (r(1, 0) - r(0, 1)) / s;
    q.x = (r(0, 2) + r(2, 0)) / s;
    q.y = (r(1, 2) + r(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

Mat3 rodrigues_between(const Vec3& a, const Vec3& b) {
  if (std::abs(a.norm() - 1.0) > kUnitVectorTol ||
      std::abs(b.norm() - 1.0) > kUnitVectorTol) {
    throw std::invalid_argument("rodrigues_between: inputs must be unit vectors");
  }
  const double c = a.dot(b);
  if (1.0 + c <= kAntipodalTol) {
    throw std::domain_error(
        "rodrigues_between: antipodal inputs, rotation axis undefined");
  }
  const Vec3 v = a.cross(b);
  const Mat3 vx = skew(v);
  return Mat3::Identity() + vx + vx * vx / (1.0 + c);
}

std::vector<Vec3> transform_points(const Pose& t, std::span<const Vec3> pts) {
  const Mat3 r = quat_to_matrix(t.rotation);
  std::vector<Vec3> out;
  out.reserve(pts.size());
  for (const Vec3& p : pts) {
    if (!p.allFinite()) {
      throw std::invalid_argument("transform_points: non-finite input point");
    }
    out.push_back(r * p + t.translation);
  }
  return out;
}

std::vector<Vec2> project_points(const CameraIntrinsics& k, const Pose& t,
                                 std::span<const Vec3> pts) {
  require_valid_intrinsics(k);
  const std::vector<Vec3> cam = transform_points(t, pts);
  std::vector<Vec2> out;
  out.reserve(cam.size());
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const double z = cam[i].z();
    if (z <= kMinProjectionDepth) {
      std::ostringstream msg;
      msg << "project_points: point " << i << " has depth " << z
          << " at or behind the camera plane";
      throw std::domain_error(msg.str());
    }
    out.emplace_back(k.fx * cam[i].x() / z + k.px,
                     k.fy * cam[i].y() / z + k.py);
  }
  return out;
}

Rect2D bbox2d_of(std::span<const Vec2> pts) {
  if (pts.empty()) {
    throw std::invalid_argument("bbox2d_of: empty point set");
  }
  double min_x = pts[0].x(), max_x = pts[0].x();
  double min_y = pts[0].y(), max_y = pts[0].y();
  for (const Vec2& p : pts) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const double w = max_x - min_x;
  const double h = max_y - min_y;
  if (!(w > 0.0) || !(h > 0.0)) {
    throw std::domain_error("bbox2d_of: points have zero extent");
  }
  return Rect2D{min_x, min_y, w, h};
}

}  // namespace roipose
