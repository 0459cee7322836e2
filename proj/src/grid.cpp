#include "f4d/grid.hpp"

#include "f4d/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace f4d {

SphericalGrid make_grid(int nu, int nv) {
  if (nu < 4 || nv < 4) {
    throw Error(ErrorCode::ResolutionTooSmall,
                "grid " + std::to_string(nu) + "x" + std::to_string(nv) + " is below the 4x4 minimum");
  }
  using std::numbers::pi;
  SphericalGrid g;
  g.nu_ = nu;
  g.nv_ = nv;
  g.du_ = pi / nu;
  g.dv_ = 2.0 * pi / nv;

  auto t = std::make_shared<SphericalGrid::Tables>();
  for (int i = 0; i < nu; ++i) {
    const double u = pi * (i + 0.5) / nu;
    t->u.push_back(u);
    t->sin_u.push_back(std::sin(u));
    t->cos_u.push_back(std::cos(u));
  }
  for (int j = 0; j < nv; ++j) {
    const double v = 2.0 * pi * j / nv;
    t->v.push_back(v);
    t->sin_v.push_back(std::sin(v));
    t->cos_v.push_back(std::cos(v));
  }
  t->points.resize(nu * nv, 3);
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      t->points.row(i * nv + j) << t->sin_u[i] * t->cos_v[j], t->sin_u[i] * t->sin_v[j], t->cos_u[i];
    }
  }
  g.data_ = std::move(t);
  return g;
}

double SphericalGrid::total_weight() const {
  double s = 0.0;
  for (int i = 0; i < nu_; ++i) s += weight(i) * nv_;
  return s;
}

Eigen::Vector3d SphericalGrid::point(int i, int j) const { return data_->points.row(index(i, j)).transpose(); }

void require_same_grid(const SphericalGrid& a, const SphericalGrid& b, const char* context) {
  if (a != b) {
    throw Error(ErrorCode::GridMismatch, std::string(context) + ": " + std::to_string(a.nu()) + "x" +
                                             std::to_string(a.nv()) + " vs " + std::to_string(b.nu()) + "x" +
                                             std::to_string(b.nv()));
  }
}

}  // namespace f4d
