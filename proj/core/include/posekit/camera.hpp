#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace posekit {

/// Pinhole intrinsics, normalized by image width/height (RealEstate10K
/// convention). Denormalize with explicit (W, H) only at pixel-space ops.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.5;
  double cy = 0.5;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// World-to-camera extrinsics: x_cam = R * x_world + t.
///
/// Camera axes: x right, y down, z forward (optical axis). The camera
/// center in world coordinates is -R^T t.
struct CameraPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d center() const { return -rotation.transpose() * translation; }

  bool operator==(const CameraPose& o) const {
    return rotation == o.rotation && translation == o.translation;
  }
};

struct PoseFrame {
  std::int64_t timestamp_us = 0;
  CameraIntrinsics intrinsics;
  CameraPose pose;

  bool operator==(const PoseFrame&) const = default;
};

/// Ordered camera trajectory. `url` is the opaque header line of the
/// RealEstate10K file format, preserved verbatim across parse/serialize.
struct PoseSequence {
  std::string url;
  std::vector<PoseFrame> frames;

  std::size_t size() const { return frames.size(); }

  bool operator==(const PoseSequence&) const = default;
};

/// Max-norm orthonormality defect ||R R^T - I||_max.
double orthonormality_defect(const Eigen::Matrix3d& r);

/// True iff ||R R^T - I||_max < tol and |det R - 1| < tol.
bool is_rotation(const Eigen::Matrix3d& r, double tol);

/// Throws NonOrthonormalRotation if is_rotation(r, tol) fails.
void validate_rotation(const Eigen::Matrix3d& r, double tol);

Eigen::Matrix3d rotation_about_x(double radians);
Eigen::Matrix3d rotation_about_y(double radians);
Eigen::Matrix3d rotation_about_z(double radians);

/// Transform mapping camera-a coordinates to camera-b coordinates:
///   R_rel = R_b R_a^T,  t_rel = t_b - R_rel t_a.
CameraPose relative_pose(const CameraPose& a, const CameraPose& b);

/// Function composition: (outer . inner), i.e. apply `inner` first.
CameraPose compose(const CameraPose& outer, const CameraPose& inner);

/// Row-major flatten of the 3x4 [R|t] matrix.
std::array<double, 12> to_motion_matrix(const CameraPose& p);

/// Exact inverse of to_motion_matrix.
CameraPose pose_from_motion_matrix(const std::array<double, 12>& m);

}  // namespace posekit
