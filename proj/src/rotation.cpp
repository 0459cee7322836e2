#include "f4d/rotation.hpp"

#include "f4d/error.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>

namespace f4d {

Rotation3 Rotation3::from_matrix(const Eigen::Matrix3d& m, double tol) {
  const double orth = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
  const double det = m.determinant();
  if (!(orth <= tol) || !(std::abs(det - 1.0) <= tol)) {
    throw Error(ErrorCode::InvalidArgument, "matrix is not a proper rotation");
  }
  return Rotation3(m);
}

Rotation3 Rotation3::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  return Rotation3(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix());
}

Rotation3 Rotation3::inverse() const { return Rotation3(m_.transpose()); }

Rotation3 Rotation3::operator*(const Rotation3& other) const { return Rotation3(m_ * other.m_); }

double Rotation3::angle_to(const Rotation3& other) const {
  const Eigen::Matrix3d d = m_.transpose() * other.m_;
  const double c = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace f4d
