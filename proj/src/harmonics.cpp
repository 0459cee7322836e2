#include "f4d/harmonics.hpp"

#include <cmath>
#include <numbers>

namespace f4d {

namespace {

// Fully normalized associated Legendre functions (no Condon-Shortley phase)
// and their u-derivatives for x = cos u.
struct Legendre {
  int l_max;
  std::vector<double> p, dp;  // indexed [l * (l_max + 1) + m]

  Legendre(int lmax, double u) : l_max(lmax), p((lmax + 1) * (lmax + 1), 0.0), dp(p.size(), 0.0) {
    const double x = std::cos(u), s = std::sin(u);
    auto at = [&](int l, int m) -> double& { return p[l * (l_max + 1) + m]; };
    at(0, 0) = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int m = 1; m <= l_max; ++m) at(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * at(m - 1, m - 1);
    for (int m = 0; m < l_max; ++m) at(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * at(m, m);
    for (int m = 0; m <= l_max; ++m) {
      for (int l = m + 2; l <= l_max; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (double(l) * l - double(m) * m));
        const double b = std::sqrt((double(l - 1) * (l - 1) - double(m) * m) / (4.0 * (l - 1) * (l - 1) - 1.0));
        at(l, m) = a * (x * at(l - 1, m) - b * at(l - 2, m));
      }
    }
    for (int l = 0; l <= l_max; ++l) {
      for (int m = 0; m <= l; ++m) {
        const double prev = l - 1 >= m ? at(l - 1, m) : 0.0;
        const double c = std::sqrt((2.0 * l + 1.0) * (double(l) * l - double(m) * m) / (2.0 * l - 1.0 + (l == 0)));
        dp[l * (l_max + 1) + m] = (l * x * at(l, m) - c * prev) / s;
      }
    }
  }
  double value(int l, int m) const { return p[l * (l_max + 1) + m]; }
  double deriv(int l, int m) const { return dp[l * (l_max + 1) + m]; }
};

}  // namespace

Eigen::MatrixXd harmonic_values_at(const Eigen::VectorXd& u, const Eigen::VectorXd& v, int l_max) {
  Eigen::MatrixXd out(u.size(), harmonic_count(l_max));
  const double r2 = std::sqrt(2.0);
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const Legendre leg(l_max, u[k]);
    for (int l = 0; l <= l_max; ++l) {
      out(k, harmonic_index(l, 0)) = leg.value(l, 0);
      for (int m = 1; m <= l; ++m) {
        out(k, harmonic_index(l, m)) = r2 * leg.value(l, m) * std::cos(m * v[k]);
        out(k, harmonic_index(l, -m)) = r2 * leg.value(l, m) * std::sin(m * v[k]);
      }
    }
  }
  return out;
}

Eigen::MatrixXd harmonic_values(const SphericalGrid& grid, int l_max) {
  Eigen::VectorXd u(grid.size()), v(grid.size());
  for (int i = 0; i < grid.nu(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      u[grid.index(i, j)] = grid.u(i);
      v[grid.index(i, j)] = grid.v(j);
    }
  }
  return harmonic_values_at(u, v, l_max);
}

std::vector<Field3> harmonic_gradients(const SphericalGrid& grid, int l_max) {
  std::vector<Field3> out(harmonic_count(l_max), Field3::Zero(grid.size(), 3));
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < grid.nu(); ++i) {
    const Legendre leg(l_max, grid.u(i));
    const double su = grid.sin_u(i), cu = grid.cos_u(i);
    for (int j = 0; j < grid.nv(); ++j) {
      const int k = grid.index(i, j);
      const double cv = grid.cos_v(j), sv = grid.sin_v(j);
      const Eigen::RowVector3d eu(cu * cv, cu * sv, -su);
      const Eigen::RowVector3d ev(-sv, cv, 0.0);
      for (int l = 1; l <= l_max; ++l) {
        out[harmonic_index(l, 0)].row(k) = leg.deriv(l, 0) * eu;
        for (int m = 1; m <= l; ++m) {
          const double c = std::cos(m * grid.v(j)), s = std::sin(m * grid.v(j));
          const double p = r2 * leg.value(l, m), dp = r2 * leg.deriv(l, m);
          out[harmonic_index(l, m)].row(k) = dp * c * eu - (m * p * s / su) * ev;
          out[harmonic_index(l, -m)].row(k) = dp * s * eu + (m * p * c / su) * ev;
        }
      }
    }
  }
  return out;
}

}  // namespace f4d
