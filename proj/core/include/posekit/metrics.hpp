#pragma once

#include <string>
#include <vector>

#include "posekit/camera.hpp"
#include "posekit/plucker.hpp"

namespace posekit {

struct MetricReport {
  std::string name;
  double value = 0.0;
  int n_frames = 0;
  std::vector<double> details;  // per-frame values; see each metric
};

/// Camera motion consistency: for each adjacent pair, take the L2 distance
/// between the flattened relative [R|t] matrices of the two sequences and
/// report the mean over pairs. Symmetric; zero iff all relative poses
/// coincide. details = per-pair distances.
///
/// This is the normative definition for this artifact (the usual citation
/// chain does not pin one down); it is versioned as "cammc-v1".
MetricReport cammc(const PoseSequence& a, const PoseSequence& b);

/// Mean squared error over all (dx, dy, plucker_delta) components of two
/// fields on the same grid. Vectors invalid on either side are excluded
/// pairwise; details = per-frame excluded-vector counts.
MetricReport field_mse(const SparseMotionField& a, const SparseMotionField& b);

/// {"metric": ..., "value": ..., "n": ..., "per_frame": [...]} in exactly
/// that key order.
std::string to_json(const MetricReport& r);

}  // namespace posekit
