#include "roipose/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace roipose {

ModelPoints ModelPoints::from_points(std::vector<Vec3> pts) {
  if (pts.empty()) {
    throw std::invalid_argument("ModelPoints: empty point cloud");
  }
  double diameter = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      diameter = std::max(diameter, (pts[i] - pts[j]).norm());
    }
  }
  if (!(diameter > 0.0)) {
    throw std::invalid_argument("ModelPoints: zero diameter");
  }
  return ModelPoints{std::move(pts), diameter};
}

double add(const Pose& est, const Pose& gt, const ModelPoints& m) {
  if (m.points.empty()) {
    throw std::invalid_argument("add: empty model");
  }
  const std::vector<Vec3> a = transform_points(est, m.points);
  const std::vector<Vec3> b = transform_points(gt, m.points);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    total += (a[i] - b[i]).norm();
  }
  return total / static_cast<double>(a.size());
}

double add_s(const Pose& est, const Pose& gt, const ModelPoints& m) {
  if (m.points.empty()) {
    throw std::invalid_argument("add_s: empty model");
  }
  const std::vector<Vec3> a = transform_points(est, m.points);
  const std::vector<Vec3> b = transform_points(gt, m.points);
  double total = 0.0;
  for (const Vec3& p : a) {
    double nearest = std::numeric_limits<double>::infinity();
    for (const Vec3& q : b) {
      nearest = std::min(nearest, (p - q).norm());
    }
    total += nearest;
  }
  return total / static_cast<double>(a.size());
}

double auc_threshold(std::span<const double> errors, double max_threshold) {
  if (!(max_threshold > 0.0)) {
    throw std::invalid_argument("auc_threshold: max_threshold must be positive");
  }
  if (errors.empty()) {
    throw std::invalid_argument("auc_threshold: no errors");
  }
  // Exact integral of the step curve: each error e <= tau contributes a
  // strip of height 1/n from e to tau.
  double area = 0.0;
  for (double e : errors) {
    if (!(e >= 0.0)) {
      throw std::invalid_argument("auc_threshold: errors must be non-negative");
    }
    area += std::max(0.0, max_threshold - e);
  }
  return area / (static_cast<double>(errors.size()) * max_threshold);
}

double accuracy_at_threshold(std::span<const double> errors, double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("accuracy_at_threshold: threshold must be positive");
  }
  if (errors.empty()) {
    throw std::invalid_argument("accuracy_at_threshold: no errors");
  }
  std::size_t below = 0;
  for (double e : errors) {
    if (e <= threshold) {
      ++below;
    }
  }
  return static_cast<double>(below) / static_cast<double>(errors.size());
}

}  // namespace roipose
