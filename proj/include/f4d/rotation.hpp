#pragma once

#include <Eigen/Core>

namespace f4d {

/// A proper rotation of R^3 (orthogonal, determinant +1).
class Rotation3 {
 public:
  Rotation3() : m_(Eigen::Matrix3d::Identity()) {}

  /// Throws InvalidArgument when `m` is not a proper rotation within `tol`.
  static Rotation3 from_matrix(const Eigen::Matrix3d& m, double tol = 1e-9);
  static Rotation3 from_axis_angle(const Eigen::Vector3d& axis, double angle);
  static Rotation3 identity() { return {}; }

  const Eigen::Matrix3d& matrix() const { return m_; }
  Rotation3 inverse() const;
  Rotation3 operator*(const Rotation3& other) const;
  Eigen::Vector3d operator*(const Eigen::Vector3d& x) const { return m_ * x; }

  /// Geodesic distance on SO(3) in radians.
  double angle_to(const Rotation3& other) const;

 private:
  explicit Rotation3(const Eigen::Matrix3d& m) : m_(m) {}
  Eigen::Matrix3d m_;
};

}  // namespace f4d
