#pragma once

#include "f4d/grid.hpp"
#include "f4d/rotation.hpp"

#include <vector>

namespace f4d {

/// Below this, normals (and velocities) count as degenerate and their
/// square-root fields are set to zero.
inline constexpr double kDegeneracyEps = 1e-8;

/// A parameterized surface f : S^2 -> R^3 sampled on a grid.
struct Surface {
  SphericalGrid grid;
  Field3 values;
};

/// Square-root normal field q = n / |n|^{1/2} of a surface.
struct Srnf {
  SphericalGrid grid;
  Field3 values;
};

/// A time-indexed list of surfaces (a 4D surface).
struct SurfaceSequence {
  std::vector<Surface> frames;
  std::vector<double> times;

  const SphericalGrid& grid() const { return frames.front().grid; }
  int size() const { return static_cast<int>(frames.size()); }
};

/// Evenly spaced times 0, 1/(n-1), ..., 1.
std::vector<double> uniform_times(int n);

/// n = df/du x df/dv by central differences (periodic in v, second-order
/// one-sided at the first and last u rows).
Field3 normal_field(const Surface& f);

Srnf srnf_map(const Surface& f);

/// sum_k <a_k, b_k> du dv, the L2 inner product of SRNF-like densities.
double l2_inner(const SphericalGrid& grid, const Field3& a, const Field3& b);
double l2_norm(const SphericalGrid& grid, const Field3& a);
double l2_distance(const SphericalGrid& grid, const Field3& a, const Field3& b);

/// Same, weighted by the round-sphere area element; used for raw surface
/// coordinates where every parameter point should count by the area it covers
/// on S^2.
double sphere_inner(const SphericalGrid& grid, const Field3& a, const Field3& b);

/// Total surface area, sum_k |n_k| du dv.
double surface_area(const Surface& f);
/// Area-weighted centroid.
Eigen::Vector3d area_centroid(const Surface& f);

/// Translate the area-weighted centroid to the origin and scale to unit area.
/// Throws DegenerateSurface if the area is below kDegeneracyEps * 4 pi.
Surface preshape_normalize(const Surface& f);

Surface rotate(const Surface& f, const Rotation3& r);
Srnf rotate(const Srnf& q, const Rotation3& r);
Surface translate(const Surface& f, const Eigen::Vector3d& c);

/// Samples an analytic map of the sphere point (u, v) onto the grid.
template <class Fn>
Surface sample_surface(const SphericalGrid& grid, Fn&& fn) {
  Surface s{grid, Field3(grid.size(), 3)};
  for (int i = 0; i < grid.nu(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      Eigen::Vector3d p = fn(grid.u(i), grid.v(j));
      s.values.row(grid.index(i, j)) = p.transpose();
    }
  }
  return s;
}

}  // namespace f4d
