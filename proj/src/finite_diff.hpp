#pragma once

#include "f4d/grid.hpp"

namespace f4d::detail {

/// d/du: central in the interior, second-order one-sided on the first and
/// last rows.
Field3 diff_u(const SphericalGrid& grid, const Field3& f);
/// d/dv: central with periodic wrap.
Field3 diff_v(const SphericalGrid& grid, const Field3& f);

/// Adjoints of the two operators above (g -> D^T g).
Field3 diff_u_adjoint(const SphericalGrid& grid, const Field3& g);
Field3 diff_v_adjoint(const SphericalGrid& grid, const Field3& g);

Field3 cross_rows(const Field3& a, const Field3& b);

}  // namespace f4d::detail
