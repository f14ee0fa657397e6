#include "posekit/plucker.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <sstream>

#include "posekit/errors.hpp"

namespace posekit {

namespace {

constexpr double kDegenerateFocal = 1e-12;

void check_intrinsics(const CameraIntrinsics& k, int width_px, int height_px) {
  if (std::abs(k.fx * width_px) < kDegenerateFocal ||
      std::abs(k.fy * height_px) < kDegenerateFocal) {
    throw DegenerateIntrinsics("focal length is (near) zero");
  }
}

}  // namespace

Eigen::Vector3d backproject_pixel(const CameraIntrinsics& k, double x, double y,
                                  int width_px, int height_px) {
  check_intrinsics(k, width_px, height_px);
  return {(x - k.cx * width_px) / (k.fx * width_px),
          (y - k.cy * height_px) / (k.fy * height_px), 1.0};
}

Eigen::Vector3d camera_point(const CameraPose& pose, const CameraIntrinsics& k,
                             double x, double y, int width_px, int height_px) {
  return pose.rotation * backproject_pixel(k, x, y, width_px, height_px) + pose.translation;
}

PluckerRay plucker_ray_from_homogeneous(const CameraPose& pose, const CameraIntrinsics& k,
                                        const Eigen::Vector3d& pixel_h,
                                        int width_px, int height_px) {
  check_intrinsics(k, width_px, height_px);
  const Eigen::Vector3d cam_dir{(pixel_h.x() - k.cx * width_px * pixel_h.z()) / (k.fx * width_px),
                                (pixel_h.y() - k.cy * height_px * pixel_h.z()) / (k.fy * height_px),
                                pixel_h.z()};
  PluckerRay ray;
  ray.direction = (pose.rotation.transpose() * cam_dir).normalized();
  ray.moment = pose.center().cross(ray.direction);
  return ray;
}

PluckerRay plucker_ray(const CameraPose& pose, const CameraIntrinsics& k,
                       double x, double y, int width_px, int height_px) {
  return plucker_ray_from_homogeneous(pose, k, {x, y, 1.0}, width_px, height_px);
}

SampleGrid sparse_grid(int width_px, int height_px, int stride_x, int stride_y) {
  if (stride_x <= 0 || stride_y <= 0) throw ZeroStride("strides must be positive");
  if (stride_x > width_px || stride_y > height_px) {
    std::ostringstream oss;
    oss << "stride (" << stride_x << ", " << stride_y << ") exceeds image "
        << width_px << "x" << height_px;
    throw StrideExceedsImage(oss.str());
  }

  SampleGrid grid;
  grid.width_px = width_px;
  grid.height_px = height_px;
  grid.stride_x = stride_x;
  grid.stride_y = stride_y;
  grid.cols = width_px / stride_x;
  grid.rows = height_px / stride_y;
  grid.points.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.cols; ++i) {
      grid.points.emplace_back(i * stride_x, j * stride_y);
    }
  }
  return grid;
}

SparseMotionField motion_field(const PoseSequence& seq, const SampleGrid& grid) {
  if (seq.frames.size() < 2) {
    throw SequenceTooShort("motion field needs at least 2 poses, got " +
                           std::to_string(seq.frames.size()));
  }

  SparseMotionField field;
  field.grid = grid;
  field.n_motion_frames = static_cast<int>(seq.frames.size()) - 1;
  field.vectors.resize(static_cast<std::size_t>(field.n_motion_frames) * grid.rows * grid.cols);

  const int w = grid.width_px, h = grid.height_px;
  for (int f = 0; f < field.n_motion_frames; ++f) {
    const PoseFrame& fa = seq.frames[static_cast<std::size_t>(f)];
    const PoseFrame& fb = seq.frames[static_cast<std::size_t>(f) + 1];
    const CameraPose rel = relative_pose(fa.pose, fb.pose);

    for (int j = 0; j < grid.rows; ++j) {
      for (int i = 0; i < grid.cols; ++i) {
        const Eigen::Vector2i pt = grid.points[static_cast<std::size_t>(j) * grid.cols + i];
        const double x = pt.x(), y = pt.y();
        MotionVector& mv = field.at(f, j, i);

        const PluckerRay ra = plucker_ray(fa.pose, fa.intrinsics, x, y, w, h);
        const PluckerRay rb = plucker_ray(fb.pose, fb.intrinsics, x, y, w, h);
        for (int c = 0; c < 3; ++c) {
          mv.plucker_delta[static_cast<std::size_t>(c)] = rb.direction(c) - ra.direction(c);
          mv.plucker_delta[static_cast<std::size_t>(c) + 3] = rb.moment(c) - ra.moment(c);
        }

        // Flow of the unit-depth point of frame a's ray under the relative
        // transform, projected with frame b's intrinsics.
        const Eigen::Vector3d q = backproject_pixel(fa.intrinsics, x, y, w, h);
        const Eigen::Vector3d q_next = rel.rotation * q + rel.translation;
        if (q_next.z() <= 0.0) {
          mv.valid = false;
          mv.dx = 0.0;
          mv.dy = 0.0;
          continue;
        }
        const CameraIntrinsics& kb = fb.intrinsics;
        const double xb = kb.fx * w * (q_next.x() / q_next.z()) + kb.cx * w;
        const double yb = kb.fy * h * (q_next.y() / q_next.z()) + kb.cy * h;
        mv.dx = xb - x;
        mv.dy = yb - y;
        mv.valid = true;
      }
    }
  }
  return field;
}

}  // namespace posekit
