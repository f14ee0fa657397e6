#pragma once

#include <cstdint>
#include <string>

#include "posekit/camera.hpp"

namespace posekit {

enum class TrajectoryKind {
  PanLeft,
  PanRight,
  PanUp,
  PanDown,
  ZoomIn,
  ZoomOut,
  Roundabout,
  Shake,
};

/// Parse "pan-left", "zoom-in", ... Throws Error on unknown names.
TrajectoryKind trajectory_kind_from_name(const std::string& name);
std::string trajectory_kind_name(TrajectoryKind kind);

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::ZoomIn;
  int n_frames = 17;
  double speed = 0.1;        // scene units (or radians of jitter) per frame
  std::uint64_t seed = 0;    // Shake only
  CameraIntrinsics intrinsics{0.5, 0.8889, 0.5, 0.5};
};

/// Deterministic synthetic trajectories at 30 fps (timestamps k*100000/3 us,
/// integer division, so 0, 33333, 66666, 100000, ...).
///
/// Frame k, speed s, world-to-camera [R|t], y-down world frame:
///   pan-left    camera center (-s k, 0, 0), R = I
///   pan-right   camera center (+s k, 0, 0), R = I
///   pan-up      camera center (0, -s k, 0), R = I
///   pan-down    camera center (0, +s k, 0), R = I
///   zoom-in     camera center (0, 0, +s k) along the optical axis, R = I
///   zoom-out    camera center (0, 0, -s k), R = I
///   roundabout  camera on a circle of radius s n/(2 pi) in the x-z plane,
///               step angle 2 pi / n, always looking at the circle center
///   shake       static pose plus uniform translation jitter in
///               [-s, s)^3 drawn from SplitMix64(seed)
PoseSequence generate(const TrajectorySpec& spec);

/// One-line summary for CLI output and file headers,
/// e.g. "zoom-in 17 frames speed=0.1" or "shake 16 frames speed=0.02 seed=42".
std::string describe(const TrajectorySpec& spec);

}  // namespace posekit
