#include "f4d/synthetic.hpp"

#include "f4d/error.hpp"
#include "f4d/harmonics.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace f4d {

namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Surface sample_shape(const SphericalGrid& grid, const ShapeFn& fn) { return sample_surface(grid, fn); }

Surface sample_shape(const SphereDiffeo& gamma, const ShapeFn& fn) {
  Surface s{gamma.grid, Field3(gamma.grid.size(), 3)};
  for (int k = 0; k < gamma.grid.size(); ++k) s.values.row(k) = fn(gamma.target_u[k], gamma.target_v[k]).transpose();
  return s;
}

ShapeFn ellipsoid_shape(double a, double b, double c) {
  return [=](double u, double v) {
    return Eigen::Vector3d(a * std::sin(u) * std::cos(v), b * std::sin(u) * std::sin(v), c * std::cos(u));
  };
}

ShapeFn bumpy_shape(std::uint64_t seed, double amplitude, int l_max, const Eigen::Vector3d& axes) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(harmonic_count(l_max));
  for (int k = harmonic_index(2, -2); k < a.size(); ++k) a[k] = normal(rng);
  if (a.norm() > 0.0) a /= a.norm();
  // Y_lm are unit in L2(S^2); sqrt(4 pi) turns that into unit RMS.
  a *= amplitude * std::sqrt(4.0 * std::numbers::pi);
  return [=](double u, double v) {
    const Eigen::VectorXd uu = Eigen::VectorXd::Constant(1, u), vv = Eigen::VectorXd::Constant(1, v);
    const double r = 1.0 + harmonic_values_at(uu, vv, l_max).row(0).dot(a);
    return Eigen::Vector3d(r * std::sin(u) * std::cos(v), r * std::sin(u) * std::sin(v), r * std::cos(u))
        .cwiseProduct(axes)
        .eval();
  };
}

ShapeFn arm_shape(const ArmShape& sh) {
  return [=](double u, double v) {
    const double rho = sh.radius * (1.0 + 0.2 * std::cos(u));
    Eigen::Vector3d p(sh.length * std::cos(u), rho * std::sin(u) * std::cos(v), rho * std::sin(u) * std::sin(v));
    const double x = p.x();
    const double t1 = sh.angle * smoothstep((x - sh.hinge) / sh.blend);
    const double t2 = sh.angle2 * smoothstep((sh.hinge2 - x) / sh.blend);
    if (t1 != 0.0) {
      const Eigen::Vector3d c(sh.hinge, 0.0, 0.0);
      p = c + Eigen::AngleAxisd(t1, Eigen::Vector3d::UnitZ()) * (p - c);
    } else if (t2 != 0.0) {
      const Eigen::Vector3d c(sh.hinge2, 0.0, 0.0);
      p = c + Eigen::AngleAxisd(t2, Eigen::Vector3d::UnitY()) * (p - c);
    }
    return p;
  };
}

Surface unit_sphere(const SphericalGrid& grid) { return sample_shape(grid, ellipsoid_shape(1.0, 1.0, 1.0)); }

Surface ellipsoid(const SphericalGrid& grid, double a, double b, double c) {
  return sample_shape(grid, ellipsoid_shape(a, b, c));
}

Surface bumpy_surface(const SphericalGrid& grid, std::uint64_t seed, double amplitude, int l_max,
                      const Eigen::Vector3d& axes) {
  return sample_shape(grid, bumpy_shape(seed, amplitude, l_max, axes));
}

Surface arm_surface(const SphericalGrid& grid, const ArmShape& shape) { return sample_shape(grid, arm_shape(shape)); }

std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i) { return master ^ (i * 0x9E3779B97F4A7C15ULL); }

SphereDiffeo random_sphere_diffeo(const TangentBasis& basis, std::uint64_t seed, double magnitude) {
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "magnitude must be nonnegative");
  const SphericalGrid& grid = basis.grid;
  if (magnitude == 0.0) {
    SphereDiffeo id = SphereDiffeo::identity(grid);
    id.coeffs = Eigen::VectorXd::Zero(basis.size());
    return id;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  constexpr int kSteps = 5;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd c(basis.size());
    for (int i = 0; i < c.size(); ++i) c[i] = normal(rng);
    const SphereDiffeo step = SphereDiffeo::displacement(grid, basis.combine(c), magnitude / kSteps);
    if (!step.is_valid()) continue;
    SphereDiffeo gamma = step;
    bool ok = true;
    for (int k = 1; k < kSteps && ok; ++k) {
      gamma = compose(gamma, step);
      ok = gamma.is_valid();
    }
    if (!ok) continue;
    gamma.coeffs = magnitude * c;
    return gamma;
  }
  throw Error(ErrorCode::MagnitudeTooLarge, "random_sphere_diffeo: every draw folded the sphere");
}

SphereDiffeo random_sphere_diffeo(const SphericalGrid& grid, std::uint64_t seed, double magnitude, int l_max) {
  return random_sphere_diffeo(make_tangent_basis(grid, l_max), seed, magnitude);
}

TimeWarp random_time_warp(int n, std::uint64_t seed, double magnitude, int modes) {
  if (n < 2) throw Error(ErrorCode::Degenerate, "random_time_warp needs at least two samples");
  if (!(magnitude >= 0.0)) throw Error(ErrorCode::InvalidArgument, "magnitude must be nonnegative");
  if (magnitude == 0.0) return TimeWarp::identity(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> a(modes), b(modes);
  for (int k = 0; k < modes; ++k) {
    a[k] = normal(rng) / std::sqrt(2.0 * modes);
    b[k] = normal(rng) / std::sqrt(2.0 * modes);
  }
  const std::vector<double> t = uniform_times(n);
  Eigen::VectorXd rate(n);
  for (int i = 0; i < n; ++i) {
    double g = 0.0;
    for (int k = 0; k < modes; ++k) {
      const double w = 2.0 * std::numbers::pi * (k + 1) * t[i];
      g += a[k] * std::sin(w) + b[k] * std::cos(w);
    }
    rate[i] = std::exp(magnitude * g);
  }
  TimeWarp xi{Eigen::VectorXd::Zero(n)};
  for (int i = 1; i < n; ++i) xi.samples[i] = xi.samples[i - 1] + 0.5 * (t[i] - t[i - 1]) * (rate[i - 1] + rate[i]);
  xi.samples /= xi.samples[n - 1];
  xi.samples[0] = 0.0;
  xi.samples[n - 1] = 1.0;
  return xi;
}

SurfaceSequence interpolate_surfaces(const Surface& f0, const Surface& f1, int n) {
  require_same_grid(f0.grid, f1.grid, "interpolate_surfaces");
  if (n < 2) throw Error(ErrorCode::Degenerate, "interpolate_surfaces needs at least two frames");
  SurfaceSequence seq;
  seq.times = uniform_times(n);
  for (double t : seq.times) {
    seq.frames.push_back({f0.grid, (1.0 - t) * f0.values + t * f1.values});
  }
  return seq;
}

SurfaceSequence warp_sequence(const SurfaceSequence& s, const TimeWarp& xi) {
  if (!xi.is_valid()) throw Error(ErrorCode::NonMonotoneWarp, "warp_sequence: invalid warp");
  if (xi.size() != s.size()) throw Error(ErrorCode::InvalidArgument, "warp_sequence: warp length differs");
  SurfaceSequence out;
  out.times = s.times;
  for (int k = 0; k < xi.size(); ++k) {
    const double at = xi.samples[k];
    auto it = std::upper_bound(s.times.begin(), s.times.end(), at);
    int j = std::clamp(static_cast<int>(it - s.times.begin()) - 1, 0, s.size() - 2);
    const double lam = std::clamp((at - s.times[j]) / (s.times[j + 1] - s.times[j]), 0.0, 1.0);
    out.frames.push_back({s.grid(), (1.0 - lam) * s.frames[j].values + lam * s.frames[j + 1].values});
  }
  return out;
}

}  // namespace f4d
