#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace roipose {

/// Outcome of one oracle check. max_error is the largest observed error in
/// the check's own units; pass means max_error stayed below tolerance (or,
/// for boolean checks, that every probe held with max_error 0).
struct CheckResult {
  std::string name;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Non-local block oracles: brute-force equivalence over the shape grid,
/// uniform-attention and residual-identity degenerate cases, permutation
/// equivariance.
std::vector<CheckResult> check_attention(std::uint64_t seed);

/// Finite-difference oracles: non-local block gradients, coordinate-loss
/// gradients in both modes, quaternion-gradient orthogonality.
std::vector<CheckResult> check_gradients(std::uint64_t seed);

/// Virtual-camera oracles: homography center anchor, principal-point
/// identity collapse, pose normalization round trip, depth-code identity
/// and monotonicity.
std::vector<CheckResult> check_homography(std::uint64_t seed);

/// Runs one suite ("attention", "gradients", "homography") or "all".
/// inject_fault corrupts the first result; it exists so the harness can
/// prove it fails when a check fails.
std::vector<CheckResult> run_checks(const std::string& suite, std::uint64_t seed,
                                    bool inject_fault = false);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace roipose
