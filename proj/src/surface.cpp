#include "f4d/surface.hpp"

#include "f4d/error.hpp"
#include "finite_diff.hpp"

#include <cmath>
#include <numbers>

namespace f4d {

std::vector<double> uniform_times(int n) {
  std::vector<double> t(n);
  for (int k = 0; k < n; ++k) t[k] = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
  if (n > 1) t.back() = 1.0;
  return t;
}

Field3 normal_field(const Surface& f) {
  return detail::cross_rows(detail::diff_u(f.grid, f.values), detail::diff_v(f.grid, f.values));
}

Srnf srnf_map(const Surface& f) {
  const Field3 n = normal_field(f);
  Srnf q{f.grid, Field3(n.rows(), 3)};
  for (Eigen::Index k = 0; k < n.rows(); ++k) {
    const double len = n.row(k).norm();
    if (len < kDegeneracyEps) {
      q.values.row(k).setZero();
    } else {
      q.values.row(k) = n.row(k) / std::sqrt(len);
    }
  }
  return q;
}

double l2_inner(const SphericalGrid& grid, const Field3& a, const Field3& b) {
  if (a.rows() != grid.size() || b.rows() != grid.size()) {
    throw Error(ErrorCode::GridMismatch, "l2_inner: field size does not match grid");
  }
  return (a.array() * b.array()).sum() * grid.chart_weight();
}

double l2_norm(const SphericalGrid& grid, const Field3& a) { return std::sqrt(l2_inner(grid, a, a)); }

double l2_distance(const SphericalGrid& grid, const Field3& a, const Field3& b) {
  return l2_norm(grid, a - b);
}

double sphere_inner(const SphericalGrid& grid, const Field3& a, const Field3& b) {
  if (a.rows() != grid.size() || b.rows() != grid.size()) {
    throw Error(ErrorCode::GridMismatch, "sphere_inner: field size does not match grid");
  }
  double s = 0.0;
  for (int i = 0; i < grid.nu(); ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.nv(); ++j) row += a.row(grid.index(i, j)).dot(b.row(grid.index(i, j)));
    s += row * grid.weight(i);
  }
  return s;
}

double surface_area(const Surface& f) {
  return normal_field(f).rowwise().norm().sum() * f.grid.chart_weight();
}

Eigen::Vector3d area_centroid(const Surface& f) {
  const Eigen::VectorXd da = normal_field(f).rowwise().norm();
  const double area = da.sum();
  if (!(area > 0.0)) return Eigen::Vector3d::Zero();
  return (f.values.transpose() * da) / area;
}

Surface preshape_normalize(const Surface& f) {
  const Eigen::VectorXd da = normal_field(f).rowwise().norm();
  const double area = da.sum() * f.grid.chart_weight();
  if (!(area >= kDegeneracyEps * 4.0 * std::numbers::pi) || !std::isfinite(area)) {
    throw Error(ErrorCode::DegenerateSurface, "total area " + std::to_string(area) + " is too small");
  }
  const Eigen::Vector3d c = (f.values.transpose() * da) / da.sum();
  Surface out{f.grid, f.values};
  out.values.rowwise() -= c.transpose();
  out.values /= std::sqrt(area);
  return out;
}

Surface rotate(const Surface& f, const Rotation3& r) {
  return {f.grid, f.values * r.matrix().transpose()};
}

Srnf rotate(const Srnf& q, const Rotation3& r) { return {q.grid, q.values * r.matrix().transpose()}; }

Surface translate(const Surface& f, const Eigen::Vector3d& c) {
  Surface out{f.grid, f.values};
  out.values.rowwise() += c.transpose();
  return out;
}

}  // namespace f4d
