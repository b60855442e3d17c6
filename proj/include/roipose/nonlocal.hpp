#pragma once

#include "roipose/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace roipose {

/// Dense rank-3 feature tensor, 64-bit reals, row-major (c, h, w).
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  static FeatureMap zeros(int channels, int height, int width);

  int positions() const { return height * width; }

  double& at(int c, int h, int w) {
    return data[static_cast<std::size_t>((c * height + h) * width + w)];
  }
  double at(int c, int h, int w) const {
    return data[static_cast<std::size_t>((c * height + h) * width + w)];
  }
};

/// Weights of the non-local block. The 1x1 convolutions of the embedded
/// Gaussian instantiation degenerate to per-position channel-mixing
/// matrices at this scale, with bottleneck C' = max(1, C/2).
struct NonLocalParams {
  Eigen::MatrixXd w_theta;  // C' x C
  Eigen::MatrixXd w_phi;    // C' x C
  Eigen::MatrixXd w_g;      // C' x C
  Eigen::MatrixXd w_z;      // C  x C'

  static int bottleneck(int channels);
  static NonLocalParams zeros(int channels);
  static NonLocalParams random(int channels, Rng& rng);
};

/// Gradients of a scalar loss with respect to the block parameters and
/// its input.
struct NonLocalGradients {
  Eigen::MatrixXd w_theta;
  Eigen::MatrixXd w_phi;
  Eigen::MatrixXd w_g;
  Eigen::MatrixXd w_z;
  FeatureMap input;
};

/// Non-local block, embedded Gaussian instantiation with residual output:
///   y_i = (1/C(x)) * sum_j exp(theta(x_i) . phi(x_j)) * g(x_j)
///   z   = W_z * y + x
/// Softmax over j uses per-row max subtraction. Vectorized over positions;
/// reduction order is fixed, so results are deterministic.
FeatureMap nonlocal_forward(const FeatureMap& x, const NonLocalParams& p);

/// Same formula evaluated with explicit loops over positions and channels,
/// no matrix algebra. Serves as the oracle for nonlocal_forward.
FeatureMap nonlocal_bruteforce(const FeatureMap& x, const NonLocalParams& p);

/// Backpropagates an upstream gradient dL/dz through the block.
NonLocalGradients nonlocal_backward(const FeatureMap& x, const NonLocalParams& p,
                                    const FeatureMap& dz);

/// Checks the analytic gradient of L = sum(z^2) against central finite
/// differences over every parameter and input entry. step must lie in
/// [1e-7, 1e-3]. Returns the max relative error, with the relative scale
/// floored at 1.
double nonlocal_grad_check(const FeatureMap& x, const NonLocalParams& p,
                           double step);

}  // namespace roipose
