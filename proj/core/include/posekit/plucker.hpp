#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "posekit/camera.hpp"

namespace posekit {

/// A 3D ray in Plucker form: unit direction d and moment m = o x d where o
/// is any point on the ray (here the camera center). d . m = 0 always.
struct PluckerRay {
  Eigen::Vector3d direction;
  Eigen::Vector3d moment;
};

/// Strided pixel grid: points (i*stride_x, j*stride_y), i in [0, cols),
/// j in [0, rows), row-major order, cols = floor(W/s_x), rows = floor(H/s_y).
struct SampleGrid {
  int width_px = 0;
  int height_px = 0;
  int stride_x = 0;
  int stride_y = 0;
  int cols = 0;  // M
  int rows = 0;  // N
  std::vector<Eigen::Vector2i> points;

  bool operator==(const SampleGrid& o) const {
    return width_px == o.width_px && height_px == o.height_px &&
           stride_x == o.stride_x && stride_y == o.stride_y;
  }
};

/// Motion at one grid point between adjacent frames: 2D pixel flow of the
/// unit-depth point plus the componentwise delta of the two Plucker rays.
/// `valid` is false when the reprojected point lands behind the camera.
struct MotionVector {
  double dx = 0.0;
  double dy = 0.0;
  std::array<double, 6> plucker_delta{};  // d then m
  bool valid = true;
};

/// Motion vectors for every adjacent frame pair of a pose sequence, laid out
/// [frame][row][col] with n_motion_frames = sequence length - 1.
struct SparseMotionField {
  SampleGrid grid;
  int n_motion_frames = 0;
  std::vector<MotionVector> vectors;

  const MotionVector& at(int frame, int row, int col) const {
    return vectors[static_cast<std::size_t>((frame * grid.rows + row)) * grid.cols + col];
  }
  MotionVector& at(int frame, int row, int col) {
    return vectors[static_cast<std::size_t>((frame * grid.rows + row)) * grid.cols + col];
  }
};

/// K^-1 [x, y, 1]^T with K denormalized to pixels:
/// K = [[fx W, 0, cx W], [0, fy H, cy H], [0, 0, 1]].
Eigen::Vector3d backproject_pixel(const CameraIntrinsics& k, double x, double y,
                                  int width_px, int height_px);

/// Camera-frame point of the back-projected pixel: Q = R K^-1 [x,y,1]^T + t.
Eigen::Vector3d camera_point(const CameraPose& pose, const CameraIntrinsics& k,
                             double x, double y, int width_px, int height_px);

/// Plucker ray through the camera center o_c = -R^T t with world direction
/// d = normalize(R^T K^-1 [x,y,1]^T); moment = o_c x d.
PluckerRay plucker_ray(const CameraPose& pose, const CameraIntrinsics& k,
                       double x, double y, int width_px, int height_px);

/// Same embedding from an arbitrary homogeneous pixel vector h ~ [x, y, 1].
/// Invariant under positive scaling of h.
PluckerRay plucker_ray_from_homogeneous(const CameraPose& pose,
                                        const CameraIntrinsics& k,
                                        const Eigen::Vector3d& pixel_h,
                                        int width_px, int height_px);

SampleGrid sparse_grid(int width_px, int height_px, int stride_x, int stride_y);

/// For each adjacent pose pair (k, k+1) and grid point:
///  - plucker_delta = ray(k+1) - ray(k), componentwise (same pixel, per-frame
///    intrinsics);
///  - (dx, dy) = pixel displacement of frame k's unit-depth point reprojected
///    through relative_pose(k, k+1). Reprojected depth <= 0 marks the vector
///    invalid instead of zeroing it.
SparseMotionField motion_field(const PoseSequence& seq, const SampleGrid& grid);

}  // namespace posekit
