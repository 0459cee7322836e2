#pragma once

#include "f4d/grid.hpp"
#include "f4d/rotation.hpp"
#include "f4d/surface.hpp"

#include <array>
#include <vector>

namespace f4d {

/// A sampled orientation-preserving self-map gamma of S^2.
///
/// `target_u/target_v` hold gamma(s) in spherical coordinates for every grid
/// sample; `jac_det` is the round-metric area distortion
/// (sin gamma_u / sin u) det d(gamma_u, gamma_v)/d(u, v), evaluated by finite
/// differences of the embedded map and normalized so the identity gives 1
/// exactly.
struct SphereDiffeo {
  SphericalGrid grid;
  Eigen::VectorXd target_u;
  Eigen::VectorXd target_v;
  Eigen::VectorXd jac_det;
  Eigen::VectorXd coeffs;  // optional: basis coefficients it was built from

  /// gamma(s) as unit vectors.
  Field3 points() const;
  bool is_valid() const { return jac_det.size() > 0 && jac_det.minCoeff() > 0.0; }

  static SphereDiffeo identity(const SphericalGrid& grid);
  /// Builds from unit (or near-unit, renormalized) image points.
  static SphereDiffeo from_points(const SphericalGrid& grid, const Field3& pts);
  static SphereDiffeo from_angles(const SphericalGrid& grid, Eigen::VectorXd tu, Eigen::VectorXd tv);
  /// The rigid map s -> R s.
  static SphereDiffeo rotation(const SphericalGrid& grid, const Rotation3& r);
  /// s -> normalize(s + scale * b(s)) for an ambient tangent field b.
  static SphereDiffeo displacement(const SphericalGrid& grid, const Field3& tangent, double scale);
};

enum class Interpolation { Bilinear, Bicubic };

/// Precomputed interpolation on the (u, v) chart, periodic in v. Near the
/// poles the rows beyond the pole are the rows on the other side of it, half a
/// turn away in v. Bicubic uses Catmull-Rom weights.
class ChartStencil {
 public:
  ChartStencil(const SphericalGrid& grid, const Eigen::VectorXd& qu, const Eigen::VectorXd& qv,
               Interpolation kind = Interpolation::Bilinear);

  Field3 apply(const Field3& f) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
  int size() const { return n_; }

 private:
  int n_ = 0;
  int taps_ = 0;
  std::vector<int> idx_;
  std::vector<double> w_;
};

/// Spherical coordinates (u in [0, pi], v in [0, 2 pi)) of a direction.
std::pair<double, double> to_spherical(const Eigen::Vector3d& p);

/// Round-metric Jacobian determinant of an embedded map given by image points.
Eigen::VectorXd round_jacobian(const SphericalGrid& grid, const Field3& pts);

/// f o gamma by interpolating f at gamma(s).
Surface apply_diffeo_surface(const Surface& f, const SphereDiffeo& gamma,
                             Interpolation kind = Interpolation::Bilinear);

/// q * gamma = sqrt(|J|) (q o gamma), written for the chart-density SRNF so
/// that srnf_map(f o gamma) == srnf_group_action(srnf_map(f), gamma).
Srnf srnf_group_action(const Srnf& q, const SphereDiffeo& gamma, Interpolation kind = Interpolation::Bilinear);

/// (outer o inner)(s) = outer(inner(s)).
SphereDiffeo compose(const SphereDiffeo& outer, const SphereDiffeo& inner);

/// Evaluates gamma at arbitrary unit vectors by bicubic interpolation of its
/// image points, continued across the poles.
Field3 evaluate(const SphereDiffeo& gamma, const Field3& at);

/// Solves gamma(x) = s for every grid point by damped Gauss-Newton on the
/// interpolated map, starting from x = s.
SphereDiffeo invert(const SphereDiffeo& gamma, int max_iter = 50, double tol = 1e-13);

}  // namespace f4d
