#include "f4d/diffeo.hpp"

#include "f4d/error.hpp"
#include "finite_diff.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace f4d {

using std::numbers::pi;

std::pair<double, double> to_spherical(const Eigen::Vector3d& p) {
  const double u = std::atan2(std::hypot(p.x(), p.y()), p.z());
  double v = std::atan2(p.y(), p.x());
  if (v < 0.0) v += 2.0 * pi;
  if (v >= 2.0 * pi) v -= 2.0 * pi;
  return {u, v};
}

namespace {

Field3 normalized_rows(const Field3& p) {
  Field3 out(p.rows(), 3);
  for (Eigen::Index k = 0; k < p.rows(); ++k) out.row(k) = p.row(k).normalized();
  return out;
}

Eigen::VectorXd triple_area(const SphericalGrid& grid, const Field3& pts) {
  const Field3 n = detail::cross_rows(detail::diff_u(grid, pts), detail::diff_v(grid, pts));
  return (n.array() * pts.array()).rowwise().sum();
}

}  // namespace

Eigen::VectorXd round_jacobian(const SphericalGrid& grid, const Field3& pts) {
  return triple_area(grid, pts).cwiseQuotient(triple_area(grid, grid.points()));
}

Field3 SphereDiffeo::points() const {
  Field3 p(target_u.size(), 3);
  for (Eigen::Index k = 0; k < target_u.size(); ++k) {
    const double su = std::sin(target_u[k]);
    p.row(k) << su * std::cos(target_v[k]), su * std::sin(target_v[k]), std::cos(target_u[k]);
  }
  return p;
}

SphereDiffeo SphereDiffeo::identity(const SphericalGrid& grid) {
  SphereDiffeo d;
  d.grid = grid;
  d.target_u.resize(grid.size());
  d.target_v.resize(grid.size());
  for (int i = 0; i < grid.nu(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) {
      d.target_u[grid.index(i, j)] = grid.u(i);
      d.target_v[grid.index(i, j)] = grid.v(j);
    }
  }
  d.jac_det = Eigen::VectorXd::Ones(grid.size());
  return d;
}

SphereDiffeo SphereDiffeo::from_points(const SphericalGrid& grid, const Field3& pts) {
  if (pts.rows() != grid.size()) throw Error(ErrorCode::GridMismatch, "diffeo points do not match grid");
  const Field3 p = normalized_rows(pts);
  SphereDiffeo d;
  d.grid = grid;
  d.target_u.resize(grid.size());
  d.target_v.resize(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const auto [u, v] = to_spherical(p.row(k).transpose());
    d.target_u[k] = u;
    d.target_v[k] = v;
  }
  d.jac_det = round_jacobian(grid, p);
  return d;
}

SphereDiffeo SphereDiffeo::from_angles(const SphericalGrid& grid, Eigen::VectorXd tu, Eigen::VectorXd tv) {
  if (tu.size() != grid.size() || tv.size() != grid.size()) {
    throw Error(ErrorCode::GridMismatch, "diffeo angles do not match grid");
  }
  SphereDiffeo d;
  d.grid = grid;
  d.target_u = std::move(tu);
  d.target_v = std::move(tv);
  d.jac_det = round_jacobian(grid, d.points());
  return d;
}

SphereDiffeo SphereDiffeo::rotation(const SphericalGrid& grid, const Rotation3& r) {
  return from_points(grid, grid.points() * r.matrix().transpose());
}

SphereDiffeo SphereDiffeo::displacement(const SphericalGrid& grid, const Field3& tangent, double scale) {
  return from_points(grid, grid.points() + scale * tangent);
}

namespace {

// Taps and weights of 1D interpolation at fractional position t between
// samples floor(t) and floor(t) + 1.
int interp_taps(Interpolation kind, double t, int& first, double w[4]) {
  const int i0 = static_cast<int>(std::floor(t));
  const double a = t - i0;
  if (kind == Interpolation::Bilinear) {
    first = i0;
    w[0] = 1.0 - a;
    w[1] = a;
    return 2;
  }
  const double a2 = a * a, a3 = a2 * a;
  first = i0 - 1;
  w[0] = 0.5 * (-a3 + 2 * a2 - a);
  w[1] = 0.5 * (3 * a3 - 5 * a2 + 2);
  w[2] = 0.5 * (-3 * a3 + 4 * a2 + a);
  w[3] = 0.5 * (a3 - a2);
  return 4;
}

}  // namespace

ChartStencil::ChartStencil(const SphericalGrid& grid, const Eigen::VectorXd& qu, const Eigen::VectorXd& qv,
                           Interpolation kind)
    : n_(static_cast<int>(qu.size())), taps_(kind == Interpolation::Bilinear ? 4 : 16) {
  const int nu = grid.nu(), nv = grid.nv();
  idx_.assign(static_cast<std::size_t>(n_) * taps_, 0);
  w_.assign(idx_.size(), 0.0);
  for (int k = 0; k < n_; ++k) {
    const double x = std::clamp(qu[k] / grid.du() - 0.5, -0.5, nu - 0.5);
    const double y = qv[k] / grid.dv();
    int ufirst;
    double wu[4];
    const int nu_taps = interp_taps(kind, x, ufirst, wu);
    int t = 0;
    for (int a = 0; a < nu_taps; ++a) {
      int r = ufirst + a;
      double yy = y;
      if (r < 0) {
        r = -r - 1;
        yy += 0.5 * nv;
      } else if (r >= nu) {
        r = 2 * nu - r - 1;
        yy += 0.5 * nv;
      }
      yy -= nv * std::floor(yy / nv);
      int vfirst;
      double wv[4];
      const int nv_taps = interp_taps(kind, yy, vfirst, wv);
      for (int b = 0; b < nv_taps; ++b, ++t) {
        const int c = ((vfirst + b) % nv + nv) % nv;
        idx_[static_cast<std::size_t>(k) * taps_ + t] = r * nv + c;
        w_[static_cast<std::size_t>(k) * taps_ + t] = wu[a] * wv[b];
      }
    }
  }
}

Field3 ChartStencil::apply(const Field3& f) const {
  Field3 out = Field3::Zero(n_, 3);
  for (int k = 0; k < n_; ++k) {
    for (int t = 0; t < taps_; ++t) {
      const std::size_t e = static_cast<std::size_t>(k) * taps_ + t;
      out.row(k) += w_[e] * f.row(idx_[e]);
    }
  }
  return out;
}

Eigen::VectorXd ChartStencil::apply(const Eigen::VectorXd& f) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n_);
  for (int k = 0; k < n_; ++k) {
    for (int t = 0; t < taps_; ++t) {
      const std::size_t e = static_cast<std::size_t>(k) * taps_ + t;
      out[k] += w_[e] * f[idx_[e]];
    }
  }
  return out;
}

Surface apply_diffeo_surface(const Surface& f, const SphereDiffeo& gamma, Interpolation kind) {
  require_same_grid(f.grid, gamma.grid, "apply_diffeo_surface");
  const ChartStencil st(f.grid, gamma.target_u, gamma.target_v, kind);
  return {f.grid, st.apply(f.values)};
}

Srnf srnf_group_action(const Srnf& q, const SphereDiffeo& gamma, Interpolation kind) {
  require_same_grid(q.grid, gamma.grid, "srnf_group_action");
  // Chart densities vanish like sqrt(sin u) at the poles, so interpolate the
  // smooth sphere density q / sqrt(sin u) and restore the factor at s:
  // sqrt(J sin u / sin gamma_u) (q o gamma) = sqrt(J sin u) (q / sqrt(sin u)) o gamma.
  const SphericalGrid& g = q.grid;
  Field3 dens = q.values;
  for (int i = 0; i < g.nu(); ++i) dens.middleRows(i * g.nv(), g.nv()) /= std::sqrt(g.sin_u(i));
  Field3 out = ChartStencil(g, gamma.target_u, gamma.target_v, kind).apply(dens);
  for (int i = 0; i < g.nu(); ++i) {
    for (int j = 0; j < g.nv(); ++j) {
      const int k = g.index(i, j);
      out.row(k) *= std::sqrt(std::max(gamma.jac_det[k], 0.0) * g.sin_u(i));
    }
  }
  return {g, std::move(out)};
}


Field3 evaluate(const SphereDiffeo& gamma, const Field3& at) {
  Eigen::VectorXd qu(at.rows()), qv(at.rows());
  for (Eigen::Index k = 0; k < at.rows(); ++k) {
    const auto [u, v] = to_spherical(at.row(k).transpose());
    qu[k] = u;
    qv[k] = v;
  }
  return normalized_rows(ChartStencil(gamma.grid, qu, qv, Interpolation::Bicubic).apply(gamma.points()));
}

SphereDiffeo compose(const SphereDiffeo& outer, const SphereDiffeo& inner) {
  require_same_grid(outer.grid, inner.grid, "compose");
  return SphereDiffeo::from_points(outer.grid, evaluate(outer, inner.points()));
}

SphereDiffeo invert(const SphereDiffeo& gamma, int max_iter, double tol) {
  // Damped Gauss-Newton per point on |s - gamma(x)|, with the 3x2 Jacobian of
  // the interpolated map taken by central differences in a tangent frame at x.
  const SphericalGrid& g = gamma.grid;
  const Field3& s = g.points();
  const Eigen::Index n = s.rows();
  const double h = 0.25 * g.du();

  Field3 x = s;
  Field3 fx = evaluate(gamma, x);
  Eigen::VectorXd res = (s - fx).rowwise().norm();
  for (int it = 0; it < max_iter && res.maxCoeff() > tol; ++it) {
    Field3 e1(n, 3), e2(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Eigen::Vector3d p = x.row(k).transpose();
      const Eigen::Vector3d a = std::abs(p.z()) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
      const Eigen::Vector3d t1 = a.cross(p).normalized();
      e1.row(k) = t1.transpose();
      e2.row(k) = p.cross(t1).transpose();
    }
    const Field3 d1 = (evaluate(gamma, normalized_rows(x + h * e1)) - evaluate(gamma, normalized_rows(x - h * e1))) / (2 * h);
    const Field3 d2 = (evaluate(gamma, normalized_rows(x + h * e2)) - evaluate(gamma, normalized_rows(x - h * e2))) / (2 * h);

    Field3 step(n, 3);
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Matrix<double, 3, 2> j;
      j.col(0) = d1.row(k).transpose();
      j.col(1) = d2.row(k).transpose();
      const Eigen::Vector3d r = (s.row(k) - fx.row(k)).transpose();
      const Eigen::Matrix2d jtj = j.transpose() * j;
      Eigen::Vector2d c = Eigen::Vector2d::Zero();
      if (std::abs(jtj.determinant()) > 1e-14) c = jtj.inverse() * (j.transpose() * r);
      step.row(k) = c[0] * e1.row(k) + c[1] * e2.row(k);
    }

    Eigen::VectorXd alpha = Eigen::VectorXd::Ones(n);
    std::vector<bool> done(n);
    for (Eigen::Index k = 0; k < n; ++k) done[k] = res[k] <= tol;
    for (int half = 0; half < 20; ++half) {
      Field3 trial(n, 3);
      for (Eigen::Index k = 0; k < n; ++k) trial.row(k) = (x.row(k) + alpha[k] * step.row(k)).normalized();
      const Field3 ft = evaluate(gamma, trial);
      bool pending = false;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (done[k]) continue;
        const double r = (s.row(k) - ft.row(k)).norm();
        if (r < res[k]) {
          x.row(k) = trial.row(k);
          fx.row(k) = ft.row(k);
          res[k] = r;
          done[k] = true;
        } else {
          alpha[k] *= 0.5;
          pending = true;
        }
      }
      if (!pending) break;
    }
  }
  return SphereDiffeo::from_points(g, x);
}

}  // namespace f4d
