#include "posekit/camera.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "posekit/errors.hpp"

namespace posekit {

double orthonormality_defect(const Eigen::Matrix3d& r) {
  const Eigen::Matrix3d gram = r * r.transpose() - Eigen::Matrix3d::Identity();
  return gram.cwiseAbs().maxCoeff();
}

bool is_rotation(const Eigen::Matrix3d& r, double tol) {
  return orthonormality_defect(r) < tol && std::abs(r.determinant() - 1.0) < tol;
}

void validate_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!is_rotation(r, tol)) {
    std::ostringstream oss;
    oss << "rotation is not orthonormal within " << tol
        << " (defect " << orthonormality_defect(r)
        << ", det " << r.determinant() << ")";
    throw NonOrthonormalRotation(oss.str());
  }
}

Eigen::Matrix3d rotation_about_x(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Eigen::Matrix3d rotation_about_y(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Eigen::Matrix3d r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Eigen::Matrix3d rotation_about_z(double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  Eigen::Matrix3d r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

CameraPose relative_pose(const CameraPose& a, const CameraPose& b) {
  CameraPose rel;
  rel.rotation = b.rotation * a.rotation.transpose();
  rel.translation = b.translation - rel.rotation * a.translation;
  return rel;
}

CameraPose compose(const CameraPose& outer, const CameraPose& inner) {
  CameraPose out;
  out.rotation = outer.rotation * inner.rotation;
  out.translation = outer.rotation * inner.translation + outer.translation;
  return out;
}

std::array<double, 12> to_motion_matrix(const CameraPose& p) {
  std::array<double, 12> m;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      m[static_cast<std::size_t>(row * 4 + col)] = p.rotation(row, col);
    }
    m[static_cast<std::size_t>(row * 4 + 3)] = p.translation(row);
  }
  return m;
}

CameraPose pose_from_motion_matrix(const std::array<double, 12>& m) {
  CameraPose p;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      p.rotation(row, col) = m[static_cast<std::size_t>(row * 4 + col)];
    }
    p.translation(row) = m[static_cast<std::size_t>(row * 4 + 3)];
  }
  return p;
}

}  // namespace posekit
