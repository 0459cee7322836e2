#include "finite_diff.hpp"

namespace f4d::detail {

namespace {

// Stencil coefficients of row i for d/du: (row offset, coefficient) triples.
struct RowStencil {
  int rows[3];
  double coef[3];
};

RowStencil u_stencil(int i, int nu, double h) {
  const double s = 1.0 / (2.0 * h);
  if (i == 0) return {{0, 1, 2}, {-3.0 * s, 4.0 * s, -1.0 * s}};
  if (i == nu - 1) return {{nu - 1, nu - 2, nu - 3}, {3.0 * s, -4.0 * s, 1.0 * s}};
  return {{i - 1, i + 1, i}, {-s, s, 0.0}};
}

}  // namespace

Field3 diff_u(const SphericalGrid& grid, const Field3& f) {
  const int nu = grid.nu(), nv = grid.nv();
  Field3 out(grid.size(), 3);
  for (int i = 0; i < nu; ++i) {
    const RowStencil st = u_stencil(i, nu, grid.du());
    for (int j = 0; j < nv; ++j) {
      out.row(i * nv + j) = st.coef[0] * f.row(st.rows[0] * nv + j) + st.coef[1] * f.row(st.rows[1] * nv + j) +
                            st.coef[2] * f.row(st.rows[2] * nv + j);
    }
  }
  return out;
}

Field3 diff_v(const SphericalGrid& grid, const Field3& f) {
  const int nu = grid.nu(), nv = grid.nv();
  const double s = 1.0 / (2.0 * grid.dv());
  Field3 out(grid.size(), 3);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int jp = (j + 1) % nv, jm = (j + nv - 1) % nv;
      out.row(i * nv + j) = s * (f.row(i * nv + jp) - f.row(i * nv + jm));
    }
  }
  return out;
}

Field3 diff_u_adjoint(const SphericalGrid& grid, const Field3& g) {
  const int nu = grid.nu(), nv = grid.nv();
  Field3 out = Field3::Zero(grid.size(), 3);
  for (int i = 0; i < nu; ++i) {
    const RowStencil st = u_stencil(i, nu, grid.du());
    for (int j = 0; j < nv; ++j) {
      for (int t = 0; t < 3; ++t) out.row(st.rows[t] * nv + j) += st.coef[t] * g.row(i * nv + j);
    }
  }
  return out;
}

Field3 diff_v_adjoint(const SphericalGrid& grid, const Field3& g) {
  const int nu = grid.nu(), nv = grid.nv();
  const double s = 1.0 / (2.0 * grid.dv());
  Field3 out(grid.size(), 3);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      const int jp = (j + 1) % nv, jm = (j + nv - 1) % nv;
      out.row(i * nv + j) = s * (g.row(i * nv + jm) - g.row(i * nv + jp));
    }
  }
  return out;
}

Field3 cross_rows(const Field3& a, const Field3& b) {
  Field3 out(a.rows(), 3);
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    out(k, 0) = a(k, 1) * b(k, 2) - a(k, 2) * b(k, 1);
    out(k, 1) = a(k, 2) * b(k, 0) - a(k, 0) * b(k, 2);
    out(k, 2) = a(k, 0) * b(k, 1) - a(k, 1) * b(k, 0);
  }
  return out;
}

}  // namespace f4d::detail
