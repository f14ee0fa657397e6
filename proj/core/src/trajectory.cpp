#include "posekit/trajectory.hpp"

#include <cmath>

#include <Eigen/Geometry>

#include "posekit/errors.hpp"
#include "posekit/pose_io.hpp"
#include "posekit/rng.hpp"

namespace posekit {

namespace {

// 30 fps in integer microseconds, cumulative so there is no drift.
std::int64_t frame_timestamp_us(int k) {
  return static_cast<std::int64_t>(k) * 100000 / 3;
}

CameraPose pose_from_center(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& center) {
  CameraPose p;
  p.rotation = rotation;
  p.translation = -rotation * center;
  return p;
}

// Camera at `center` looking at `target`, upright in the y-down world frame.
CameraPose look_at(const Eigen::Vector3d& center, const Eigen::Vector3d& target) {
  const Eigen::Vector3d forward = (target - center).normalized();
  const Eigen::Vector3d down(0.0, 1.0, 0.0);
  const Eigen::Vector3d right = down.cross(forward).normalized();
  const Eigen::Vector3d down_ortho = forward.cross(right);
  Eigen::Matrix3d rotation;
  rotation.row(0) = right;
  rotation.row(1) = down_ortho;
  rotation.row(2) = forward;
  return pose_from_center(rotation, center);
}

}  // namespace

TrajectoryKind trajectory_kind_from_name(const std::string& name) {
  if (name == "pan-left") return TrajectoryKind::PanLeft;
  if (name == "pan-right") return TrajectoryKind::PanRight;
  if (name == "pan-up") return TrajectoryKind::PanUp;
  if (name == "pan-down") return TrajectoryKind::PanDown;
  if (name == "zoom-in") return TrajectoryKind::ZoomIn;
  if (name == "zoom-out") return TrajectoryKind::ZoomOut;
  if (name == "roundabout") return TrajectoryKind::Roundabout;
  if (name == "shake") return TrajectoryKind::Shake;
  throw Error("unknown trajectory kind '" + name + "'");
}

std::string trajectory_kind_name(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::PanLeft: return "pan-left";
    case TrajectoryKind::PanRight: return "pan-right";
    case TrajectoryKind::PanUp: return "pan-up";
    case TrajectoryKind::PanDown: return "pan-down";
    case TrajectoryKind::ZoomIn: return "zoom-in";
    case TrajectoryKind::ZoomOut: return "zoom-out";
    case TrajectoryKind::Roundabout: return "roundabout";
    case TrajectoryKind::Shake: return "shake";
  }
  throw Error("unknown trajectory kind value");
}

PoseSequence generate(const TrajectorySpec& spec) {
  if (spec.n_frames < 2) throw Error("trajectory needs n_frames >= 2");
  if (spec.speed <= 0.0) throw Error("trajectory needs speed > 0");

  PoseSequence seq;
  seq.url = describe(spec);
  seq.frames.reserve(static_cast<std::size_t>(spec.n_frames));

  SplitMix64 rng(spec.seed);
  const double s = spec.speed;
  const int n = spec.n_frames;

  for (int k = 0; k < n; ++k) {
    PoseFrame frame;
    frame.timestamp_us = frame_timestamp_us(k);
    frame.intrinsics = spec.intrinsics;

    const double ks = s * k;
    switch (spec.kind) {
      case TrajectoryKind::PanLeft:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {-ks, 0.0, 0.0});
        break;
      case TrajectoryKind::PanRight:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {ks, 0.0, 0.0});
        break;
      case TrajectoryKind::PanUp:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {0.0, -ks, 0.0});
        break;
      case TrajectoryKind::PanDown:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {0.0, ks, 0.0});
        break;
      case TrajectoryKind::ZoomIn:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {0.0, 0.0, ks});
        break;
      case TrajectoryKind::ZoomOut:
        frame.pose = pose_from_center(Eigen::Matrix3d::Identity(), {0.0, 0.0, -ks});
        break;
      case TrajectoryKind::Roundabout: {
        const double radius = s * n / (2.0 * M_PI);
        const double angle = 2.0 * M_PI * k / n;
        const Eigen::Vector3d center(radius * std::sin(angle), 0.0,
                                     -radius * std::cos(angle));
        frame.pose = look_at(center, Eigen::Vector3d::Zero());
        break;
      }
      case TrajectoryKind::Shake: {
        Eigen::Vector3d jitter(s * rng.next_signed(), s * rng.next_signed(),
                               s * rng.next_signed());
        frame.pose.rotation = Eigen::Matrix3d::Identity();
        frame.pose.translation = jitter;
        break;
      }
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::string describe(const TrajectorySpec& spec) {
  std::string out = trajectory_kind_name(spec.kind);
  out += " " + std::to_string(spec.n_frames) + " frames";
  out += " speed=" + format_number(spec.speed);
  if (spec.kind == TrajectoryKind::Shake) {
    out += " seed=" + std::to_string(spec.seed);
  }
  return out;
}

}  // namespace posekit
