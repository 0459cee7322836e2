#include "f4d/error.hpp"
#include "f4d/srnf_inversion.hpp"
#include "f4d/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace f4d;

namespace {

// RMS point distance after removing the mean offset, over the bbox diagonal.
double bbox_rms(const Surface& a, const Surface& b) {
  Field3 d = a.values - b.values;
  d.rowwise() -= d.colwise().mean();
  const double diag = (b.values.colwise().maxCoeff() - b.values.colwise().minCoeff()).norm();
  return std::sqrt(d.rowwise().squaredNorm().mean()) / diag;
}

}  // namespace

TEST_CASE("inverting the SRNF of an ellipsoid") {
  const SphericalGrid g = make_grid(16, 16);
  const Surface f = preshape_normalize(ellipsoid(g, 1.3, 1.0, 0.8));
  const InversionResult r = invert_srnf(srnf_map(f));
  CHECK(r.residual <= r.initial_residual);
  CHECK(bbox_rms(r.surface, f) < 1e-2);
  for (std::size_t k = 1; k < r.energy_trace.size(); ++k) CHECK(r.energy_trace[k] <= r.energy_trace[k - 1]);
}

TEST_CASE("inversion is translation blind but rotation aware") {
  const SphericalGrid g = make_grid(16, 16);
  const Surface f = preshape_normalize(ellipsoid(g, 1.25, 1.0, 0.85));
  const Rotation3 rot = Rotation3::from_axis_angle(Eigen::Vector3d(1, 2, 0).normalized(), 0.8);
  const Surface moved = translate(rotate(f, rot), Eigen::Vector3d(3, -1, 2));
  const InversionResult r = invert_srnf(srnf_map(moved));
  CHECK(bbox_rms(r.surface, moved) < 1e-2);
}

TEST_CASE("inversion with an explicit start") {
  const SphericalGrid g = make_grid(12, 12);
  const Surface f = preshape_normalize(ellipsoid(g, 1.2, 1.0, 0.9));
  InversionConfig cfg;
  cfg.init = f;
  const InversionResult r = invert_srnf(srnf_map(f), cfg);
  // Starting at the answer: nothing to do.
  CHECK(r.initial_residual < 1e-10);
  CHECK(bbox_rms(r.surface, f) < 1e-8);
}

TEST_CASE("inverting a trajectory frame by frame") {
  const SphericalGrid g = make_grid(12, 12);
  std::vector<Srnf> qs;
  std::vector<Surface> fs;
  for (double a : {1.0, 1.15, 1.3}) {
    fs.push_back(preshape_normalize(ellipsoid(g, a, 1.0, 0.9)));
    qs.push_back(srnf_map(fs.back()));
  }
  const std::vector<InversionResult> out = invert_trajectory(qs);
  REQUIRE(out.size() == 3);
  for (int t = 0; t < 3; ++t) CHECK(bbox_rms(out[t].surface, fs[t]) < 1e-2);
}

TEST_CASE("inversion weights are positive") {
  const Eigen::VectorXd w = inversion_weights(make_grid(12, 16));
  CHECK(w.size() == 12 * 16);
  CHECK(w.minCoeff() > 0.0);
}

TEST_CASE("inversion rejects non-finite input") {
  Srnf q = srnf_map(unit_sphere(make_grid(8, 8)));
  q.values(3, 1) = std::nan("");
  CHECK_THROWS_AS(invert_srnf(q), Error);
}
