#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "posekit/camera.hpp"
#include "posekit/render.hpp"
#include "posekit/rng.hpp"

namespace posekit::test {

inline Eigen::Matrix3d random_rotation(SplitMix64& rng) {
  Eigen::Vector3d axis(rng.next_signed(), rng.next_signed(), rng.next_signed());
  while (axis.norm() < 1e-6) {
    axis = Eigen::Vector3d(rng.next_signed(), rng.next_signed(), rng.next_signed());
  }
  const double angle = rng.next_in(-M_PI, M_PI);
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline CameraPose random_pose(SplitMix64& rng, double t_range = 2.0) {
  CameraPose p;
  p.rotation = random_rotation(rng);
  p.translation = Eigen::Vector3d(rng.next_in(-t_range, t_range), rng.next_in(-t_range, t_range),
                                  rng.next_in(-t_range, t_range));
  return p;
}

inline CameraIntrinsics random_intrinsics(SplitMix64& rng) {
  CameraIntrinsics k;
  k.fx = rng.next_in(0.3, 2.0);
  k.fy = rng.next_in(0.3, 2.0);
  k.cx = rng.next_in(0.2, 0.8);
  k.cy = rng.next_in(0.2, 0.8);
  return k;
}

inline PoseSequence random_sequence(SplitMix64& rng, int n_frames) {
  PoseSequence seq;
  seq.url = "https://example.com/video";
  std::int64_t t = 0;
  for (int i = 0; i < n_frames; ++i) {
    PoseFrame f;
    f.timestamp_us = t;
    t += 1000 + static_cast<std::int64_t>(rng.next_double() * 5000);
    f.intrinsics = random_intrinsics(rng);
    f.pose = random_pose(rng);
    seq.frames.push_back(f);
  }
  return seq;
}

inline bool matrix_near(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() < tol;
}

inline bool vector_near(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double tol) {
  return (a - b).cwiseAbs().maxCoeff() < tol;
}

// Minimal PPM (P6, maxval 255) reader used as the write_ppm oracle.
inline RgbImage read_ppm(std::istream& in) {
  std::string magic;
  in >> magic;
  if (magic != "P6") throw std::runtime_error("not a P6 PPM");
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  if (maxval != 255) throw std::runtime_error("unsupported maxval");
  in.get();  // single whitespace after header
  RgbImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw std::runtime_error("truncated PPM payload");
  return img;
}

inline RgbImage read_ppm_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  return read_ppm(f);
}

inline std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace posekit::test
