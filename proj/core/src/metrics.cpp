#include "posekit/metrics.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "posekit/errors.hpp"

namespace posekit {

MetricReport cammc(const PoseSequence& a, const PoseSequence& b) {
  if (a.size() != b.size()) {
    throw LengthMismatch("cammc: sequence lengths differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
  if (a.size() < 2) {
    throw SequenceTooShort("cammc needs at least 2 frames, got " + std::to_string(a.size()));
  }

  MetricReport report;
  report.name = "cammc-v1";
  report.n_frames = static_cast<int>(a.size());
  report.details.reserve(a.size() - 1);

  double total = 0.0;
  for (std::size_t k = 0; k + 1 < a.size(); ++k) {
    const auto ra = to_motion_matrix(relative_pose(a.frames[k].pose, a.frames[k + 1].pose));
    const auto rb = to_motion_matrix(relative_pose(b.frames[k].pose, b.frames[k + 1].pose));
    double sq = 0.0;
    for (std::size_t i = 0; i < 12; ++i) {
      const double d = ra[i] - rb[i];
      sq += d * d;
    }
    const double dist = std::sqrt(sq);
    report.details.push_back(dist);
    total += dist;
  }
  report.value = total / static_cast<double>(report.details.size());
  return report;
}

MetricReport field_mse(const SparseMotionField& a, const SparseMotionField& b) {
  if (!(a.grid == b.grid) || a.n_motion_frames != b.n_motion_frames) {
    throw GridMismatch("field_mse: fields differ in grid or frame count");
  }

  MetricReport report;
  report.name = "field-mse-v1";
  report.n_frames = a.n_motion_frames;
  report.details.reserve(static_cast<std::size_t>(a.n_motion_frames));

  double total = 0.0;
  std::size_t n_components = 0;
  for (int f = 0; f < a.n_motion_frames; ++f) {
    int excluded = 0;
    for (int j = 0; j < a.grid.rows; ++j) {
      for (int i = 0; i < a.grid.cols; ++i) {
        const MotionVector& va = a.at(f, j, i);
        const MotionVector& vb = b.at(f, j, i);
        if (!va.valid || !vb.valid) {
          ++excluded;  // pairwise exclusion
          continue;
        }
        double d = va.dx - vb.dx;
        total += d * d;
        d = va.dy - vb.dy;
        total += d * d;
        for (std::size_t c = 0; c < 6; ++c) {
          d = va.plucker_delta[c] - vb.plucker_delta[c];
          total += d * d;
        }
        n_components += 8;
      }
    }
    report.details.push_back(static_cast<double>(excluded));
  }
  report.value = (n_components > 0) ? total / static_cast<double>(n_components) : 0.0;
  return report;
}

std::string to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = r.name;
  j["value"] = r.value;
  j["n"] = r.n_frames;
  j["per_frame"] = r.details;
  return j.dump();
}

}  // namespace posekit
