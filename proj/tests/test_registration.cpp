#include "f4d/error.hpp"
#include "f4d/spatial_registration.hpp"
#include "f4d/synthetic.hpp"

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>
#include <random>

using namespace f4d;

namespace {

Eigen::VectorXd sphere_weights(const SphericalGrid& g) {
  Eigen::VectorXd w(g.size());
  for (int i = 0; i < g.nu(); ++i) w.segment(i * g.nv(), g.nv()).setConstant(g.weight(i));
  return w;
}

bool non_increasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("tangent basis is tangent and orthonormal") {
  const SphericalGrid g = make_grid(32, 32);
  const TangentBasis b = make_tangent_basis(g, 3);
  // Gradients of degrees 1..3: 3 + 5 + 7 fields.
  CHECK(b.size() == 15);
  const Eigen::VectorXd w = sphere_weights(g);
  for (int a = 0; a < b.size(); ++a) {
    CHECK((b.elements[a].cwiseProduct(g.points())).rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
    for (int c = 0; c < b.size(); ++c) {
      const double ip = (b.elements[a].cwiseProduct(b.elements[c]).rowwise().sum().array() * w.array()).sum();
      CHECK(ip == doctest::Approx(a == c ? 1.0 : 0.0).epsilon(1e-9));
    }
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(b.size());
  c[2] = 2.0;
  CHECK((b.combine(c) - 2.0 * b.elements[2]).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("optimal rotation recovers a known rotation") {
  const SphericalGrid g = make_grid(24, 24);
  const Srnf q = srnf_map(preshape_normalize(bumpy_surface(g, 2, 0.2, 4, Eigen::Vector3d(1.3, 1.0, 0.7))));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  for (int k = 0; k < 10; ++k) {
    const Rotation3 r = Rotation3::from_axis_angle(Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized(), 2.5 * k / 10.0 + 0.1);
    // q1 = R q2, so the fit must return R.
    const RotationFit fit = optimal_rotation(rotate(q, r), q);
    CHECK((fit.rotation.matrix() - r.matrix()).norm() < 1e-8);
    CHECK_FALSE(fit.rank_deficient);
    CHECK(fit.rotation.matrix().determinant() == doctest::Approx(1.0));
  }
}

TEST_CASE("optimal rotation flags a symmetric shape") {
  const SphericalGrid g = make_grid(24, 24);
  const Srnf q = srnf_map(unit_sphere(g));
  CHECK(optimal_rotation(q, q).rank_deficient);
}

TEST_CASE("diffeo search decreases the energy and undoes a small reparameterization") {
  const SphericalGrid g = make_grid(32, 32);
  const ShapeFn shape = bumpy_shape(3, 0.2, 4, Eigen::Vector3d(1.2, 1.0, 0.8));
  const SphereDiffeo gamma0 = random_sphere_diffeo(g, 21, 0.05);
  const Srnf q1 = srnf_map(sample_shape(g, shape));
  const Srnf q2 = srnf_map(sample_shape(gamma0, shape));
  // The generator uses degrees up to 6; a smaller basis cannot undo it.
  const TangentBasis basis = make_tangent_basis(g, 6);
  DiffeoSearchOptions opt;
  opt.max_iter = 30;
  const DiffeoSearch s = register_diffeo(q1, q2, basis, opt);
  REQUIRE(s.energy_trace.size() >= 2);
  CHECK(non_increasing(s.energy_trace));
  CHECK(s.energy_trace.back() < 0.2 * s.energy_trace.front());
  CHECK(s.diffeo.is_valid());
  // q2 * gamma ~ q1 means gamma ~ gamma0^{-1}.
  const SphereDiffeo truth = invert(gamma0);
  CHECK(registration_error(s.diffeo, truth) < 0.3 * registration_error(SphereDiffeo::identity(g), truth));
}

TEST_CASE("gradient direction also descends") {
  const SphericalGrid g = make_grid(24, 24);
  const ShapeFn shape = ellipsoid_shape(1.3, 1.0, 0.8);
  const Srnf q1 = srnf_map(sample_shape(g, shape));
  const Srnf q2 = srnf_map(sample_shape(random_sphere_diffeo(g, 4, 0.05), shape));
  DiffeoSearchOptions opt;
  opt.direction = DescentDirection::Gradient;
  opt.max_iter = 15;
  const DiffeoSearch s = register_diffeo(q1, q2, make_tangent_basis(g, 3), opt);
  CHECK(non_increasing(s.energy_trace));
  CHECK(s.energy_trace.back() < s.energy_trace.front());
}

TEST_CASE("register_pair handles a rotated copy") {
  const SphericalGrid g = make_grid(24, 24);
  const Surface f1 = preshape_normalize(ellipsoid(g, 1.4, 1.0, 0.7));
  const Rotation3 r = Rotation3::from_axis_angle(Eigen::Vector3d(0.3, -0.2, 1).normalized(), 0.6);
  RegistrationConfig cfg;
  cfg.l_max = 3;
  cfg.outer_iters = 3;
  const RegistrationResult res = register_pair(f1, rotate(f1, r), cfg);
  CHECK(non_increasing(res.energy_trace));
  // R (f2 o gamma) = f1 with f2 = r f1: the rotation must be r^{-1}.
  CHECK(res.rotation.angle_to(r.inverse()) < 1e-2);
  const Surface back = apply_registration(rotate(f1, r), res);
  CHECK(l2_distance(g, srnf_map(back).values, srnf_map(f1).values) < 1e-2);
}

TEST_CASE("register_pair rejects mismatched grids") {
  const Surface a = unit_sphere(make_grid(16, 16)), b = unit_sphere(make_grid(16, 20));
  CHECK_THROWS_AS(register_pair(a, b), Error);
}

TEST_CASE("registration error") {
  const SphericalGrid g = make_grid(24, 24);
  const SphereDiffeo a = random_sphere_diffeo(g, 1, 0.05);
  CHECK(registration_error(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  const Rotation3 r = Rotation3::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.3);
  // Every point moves along a circle of latitude by the chord angle.
  const double e = registration_error(SphereDiffeo::identity(g), SphereDiffeo::rotation(g, r));
  CHECK(e > 0.0);
  CHECK(e < 0.3);
}

TEST_CASE("random diffeo error grows with magnitude on average") {
  const SphericalGrid g = make_grid(16, 16);
  const SphereDiffeo id = SphereDiffeo::identity(g);
  double previous = 0.0;
  for (double m : {0.01, 0.03, 0.06, 0.1}) {
    double mean = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) mean += registration_error(id, random_sphere_diffeo(g, s, m)) / 20.0;
    CHECK(mean > previous);
    previous = mean;
  }
}

TEST_CASE("trajectory registration registers every frame") {
  const SphericalGrid g = make_grid(16, 16);
  const Surface ref = preshape_normalize(ellipsoid(g, 1.3, 1.0, 0.8));
  const Rotation3 r = Rotation3::from_axis_angle(Eigen::Vector3d::UnitX(), 0.4);
  std::vector<Surface> frames;
  for (int t = 0; t < 3; ++t) frames.push_back(rotate(preshape_normalize(ellipsoid(g, 1.3 + 0.05 * t, 1.0, 0.8)), r));
  RegistrationConfig cfg;
  cfg.l_max = 2;
  cfg.outer_iters = 2;
  const TrajectoryRegistration tr = register_trajectory(frames, ref, cfg);
  CHECK(tr.results.size() == 3);
  CHECK(tr.registered.size() == 3);
  const double before = l2_distance(g, srnf_map(frames[0]).values, srnf_map(ref).values);
  const double after = l2_distance(g, srnf_map(tr.registered[0]).values, srnf_map(ref).values);
  CHECK(after < 0.1 * before);
}
