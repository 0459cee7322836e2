#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace f4d {

/// Per-grid-point 3-vectors, one row per sample, u-major (row k = i * nv + j).
using Field3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Pole-offset equiangular discretization of S^2.
///
/// u_i = pi (i + 1/2) / nu is the polar angle, v_j = 2 pi j / nv the azimuth.
/// `weight(i)` is the round-sphere area element sin(u_i) du dv, so the weights
/// integrate the sphere's area. `chart_weight()` is the flat du dv element of
/// the (u, v) chart, which is the measure SRNFs and TSRVFs are integrated
/// against: an SRNF is a density with respect to parameter area.
///
/// Copies are cheap; the sample tables are shared.
class SphericalGrid {
 public:
  SphericalGrid() = default;

  int nu() const { return nu_; }
  int nv() const { return nv_; }
  int size() const { return nu_ * nv_; }
  int index(int i, int j) const { return i * nv_ + j; }

  double du() const { return du_; }
  double dv() const { return dv_; }
  double u(int i) const { return data_->u[i]; }
  double v(int j) const { return data_->v[j]; }
  double sin_u(int i) const { return data_->sin_u[i]; }
  double cos_u(int i) const { return data_->cos_u[i]; }
  double sin_v(int j) const { return data_->sin_v[j]; }
  double cos_v(int j) const { return data_->cos_v[j]; }

  /// Round-sphere quadrature weight of any point in row i.
  double weight(int i) const { return data_->sin_u[i] * du_ * dv_; }
  /// Flat parameter-area weight du dv (same for every point).
  double chart_weight() const { return du_ * dv_; }
  /// Sum of the round-sphere weights over the whole grid.
  double total_weight() const;

  /// Unit vector of the sample (i, j).
  Eigen::Vector3d point(int i, int j) const;
  /// All sample points as a field (the identity map of the sphere).
  const Field3& points() const { return data_->points; }

  bool operator==(const SphericalGrid& other) const { return nu_ == other.nu_ && nv_ == other.nv_; }
  bool operator!=(const SphericalGrid& other) const { return !(*this == other); }

 private:
  friend SphericalGrid make_grid(int nu, int nv);

  struct Tables {
    std::vector<double> u, v, sin_u, cos_u, sin_v, cos_v;
    Field3 points;
  };

  int nu_ = 0;
  int nv_ = 0;
  double du_ = 0.0;
  double dv_ = 0.0;
  std::shared_ptr<const Tables> data_;
};

/// Builds a grid; throws ResolutionTooSmall unless nu, nv >= 4.
SphericalGrid make_grid(int nu, int nv);

/// Throws GridMismatch when the two grids differ.
void require_same_grid(const SphericalGrid& a, const SphericalGrid& b, const char* context);

}  // namespace f4d
