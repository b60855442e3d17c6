#pragma once

#include "roipose/geometry.hpp"

namespace roipose {

/// Model point cloud in the object frame, with its diameter (max pairwise
/// distance) used to scale metric thresholds.
struct ModelPoints {
  std::vector<Vec3> points;
  double diameter = 0.0;

  /// Computes the diameter by exhaustive pairwise search. Throws
  /// std::invalid_argument on an empty cloud or zero diameter.
  static ModelPoints from_points(std::vector<Vec3> pts);
};

/// ADD: mean distance between corresponding model points under the two
/// poses.
double add(const Pose& est, const Pose& gt, const ModelPoints& m);

/// ADD-S: mean over points of the distance to the closest transformed
/// model point; tolerant to object symmetries. Exact O(n^2) search.
double add_s(const Pose& est, const Pose& gt, const ModelPoints& m);

/// Area under the accuracy-vs-threshold step curve on [0, max_threshold],
/// normalized to [0, 1]. Errors above max_threshold contribute nothing.
double auc_threshold(std::span<const double> errors, double max_threshold);

/// Fraction of errors at or below the threshold.
double accuracy_at_threshold(std::span<const double> errors, double threshold);

}  // namespace roipose
