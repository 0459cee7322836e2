#pragma once

#include "f4d/grid.hpp"

#include <vector>

namespace f4d {

/// Column of (l, m), |m| <= l, in the harmonic tables below.
constexpr int harmonic_index(int l, int m) { return l * l + l + m; }
constexpr int harmonic_count(int l_max) { return (l_max + 1) * (l_max + 1); }

/// Orthonormal real spherical harmonics Y_lm for l <= l_max on the grid
/// points: one row per point, one column per (l, m). m > 0 uses cos(m v),
/// m < 0 uses sin(|m| v).
Eigen::MatrixXd harmonic_values(const SphericalGrid& grid, int l_max);
/// Same at arbitrary (u, v) pairs.
Eigen::MatrixXd harmonic_values_at(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int l_max);

/// Surface gradients of the same harmonics as ambient tangent vectors
/// (d_u Y) e_u + (d_v Y / sin u) e_v, one field per column index.
std::vector<Field3> harmonic_gradients(const SphericalGrid& grid, int l_max);

}  // namespace f4d
