#include "f4d/error.hpp"
#include "f4d/statistics.hpp"
#include "f4d/synthetic.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace f4d;

namespace {

Tsrvf path_tsrvf(const SphericalGrid& g, std::uint64_t seed, int frames, double amplitude = 0.2) {
  const SurfaceSequence s = interpolate_surfaces(preshape_normalize(bumpy_surface(g, trial_seed(seed, 0), amplitude)),
                                                 preshape_normalize(bumpy_surface(g, trial_seed(seed, 1), amplitude)), frames);
  return tsrvf_map(Trajectory::from_surfaces(s.frames, s.times));
}

double total_variance(const std::vector<Tsrvf>& qs, const Tsrvf& mean) {
  double v = 0.0;
  for (const Tsrvf& q : qs) v += std::pow(tsrvf_distance(q, mean), 2);
  return v / static_cast<double>(qs.size() - 1);
}

Tsrvf sample_mean(const std::vector<Tsrvf>& qs) {
  Tsrvf m = qs.front();
  for (std::size_t i = 1; i < qs.size(); ++i) m.values += qs[i].values;
  m.values /= static_cast<double>(qs.size());
  return m;
}

}  // namespace

TEST_CASE("Karcher cost never increases") {
  const SphericalGrid g = make_grid(8, 8);
  for (std::uint64_t s = 0; s < 3; ++s) {
    std::vector<Tsrvf> qs;
    for (int i = 0; i < 4; ++i) qs.push_back(warp_action(path_tsrvf(g, trial_seed(s, i), 16), random_time_warp(16, trial_seed(s, 10 + i), 0.4)));
    KarcherConfig cfg;
    cfg.max_iter = 6;
    const MeanResult m = karcher_mean(qs, cfg);
    REQUIRE(m.cost_trace.size() >= 2);
    for (std::size_t k = 1; k < m.cost_trace.size(); ++k) CHECK(m.cost_trace[k] <= m.cost_trace[k - 1]);
    CHECK(m.warps.size() == 4);
    CHECK(m.aligned_tsrvfs.size() == 4);
    // The mean is the average of the aligned inputs.
    CHECK((sample_mean(m.aligned_tsrvfs).values - m.mean_tsrvf.values).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("Karcher mean of identical inputs is that input") {
  const SphericalGrid g = make_grid(8, 8);
  const Tsrvf q = path_tsrvf(g, 4, 12);
  const MeanResult m = karcher_mean({q, q, q});
  CHECK((m.mean_tsrvf.values - q.values).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(m.converged);
  CHECK(m.cost_trace.back() < 1e-20);
}

TEST_CASE("Karcher mean needs input") {
  CHECK_THROWS_AS(karcher_mean({}), Error);
}

TEST_CASE("PCA eigenvalues sum to the total variance") {
  const SphericalGrid g = make_grid(8, 8);
  std::vector<Tsrvf> qs;
  for (int i = 0; i < 6; ++i) qs.push_back(path_tsrvf(g, 30 + i, 10));
  const Tsrvf mean = sample_mean(qs);
  const PcaModel m = pca(qs, mean, 5);
  CHECK(m.k == 5);
  CHECK_FALSE(m.rank_deficient);
  CHECK(std::abs(m.eigenvalues.sum() - total_variance(qs, mean)) < 1e-8 * total_variance(qs, mean));
  for (int i = 1; i < m.k; ++i) CHECK(m.eigenvalues[i] <= m.eigenvalues[i - 1]);
  for (int i = 0; i < m.k; ++i) {
    for (int j = 0; j < m.k; ++j) {
      CHECK(std::abs(tsrvf_inner(m.eigenvectors[i], m.eigenvectors[j]) - (i == j ? 1.0 : 0.0)) < 1e-8);
    }
  }
}

TEST_CASE("reconstruction error does not grow with k") {
  const SphericalGrid g = make_grid(8, 8);
  std::vector<Tsrvf> qs;
  for (int i = 0; i < 7; ++i) qs.push_back(path_tsrvf(g, 50 + i, 10));
  const PcaModel m = pca(qs, sample_mean(qs), 6);
  for (const Tsrvf& q : qs) {
    const Eigen::VectorXd c = project(m, q);
    double previous = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= m.k; ++k) {
      const double e = tsrvf_distance(reconstruct(m, c, k), q);
      CHECK(e <= previous + 1e-12);
      previous = e;
    }
    // All n - 1 components span the centred sample.
    CHECK(previous < 1e-8 * tsrvf_norm(q));
  }
}

TEST_CASE("a rank-one family is recovered exactly") {
  const SphericalGrid g = make_grid(8, 8);
  const Tsrvf base = path_tsrvf(g, 1, 10);
  Tsrvf dir = path_tsrvf(g, 2, 10);
  dir.values /= tsrvf_norm(dir);
  std::vector<Tsrvf> qs;
  for (double a : {-1.0, -0.3, 0.2, 0.5, 0.6}) qs.push_back({g, base.times, base.values + a * dir.values});
  const PcaModel m = pca(qs, sample_mean(qs), 3);
  CHECK(m.k == 1);
  CHECK(m.rank_deficient);
  CHECK(std::abs(std::abs(tsrvf_inner(m.eigenvectors[0], dir)) - 1.0) < 1e-10);
  for (const Tsrvf& q : qs) CHECK(tsrvf_distance(reconstruct(m, project(m, q)), q) < 1e-10);
}

TEST_CASE("principal paths and sampling") {
  const SphericalGrid g = make_grid(8, 8);
  std::vector<Tsrvf> qs;
  for (int i = 0; i < 4; ++i) qs.push_back(path_tsrvf(g, 70 + i, 8));
  const PcaModel m = pca(qs, sample_mean(qs), 2);
  const std::vector<Tsrvf> p = principal_path(m, 1, {-1.0, 0.0, 2.0});
  REQUIRE(p.size() == 3);
  CHECK(p[1].values == m.mean.values);
  CHECK(tsrvf_distance(p[2], m.mean) == doctest::Approx(2.0 * std::sqrt(m.eigenvalues[1])));
  CHECK(project(m, p[2])[1] == doctest::Approx(2.0));
  CHECK_THROWS_AS(principal_path(m, 2, {1.0}), Error);

  const Eigen::VectorXd c = sample_coefficients(m, 9, 0.5);
  CHECK(c.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(sample_coefficients(m, 9, 0.5) == c);
  CHECK(sample_random(m, 9, 0.5).values == reconstruct(m, c).values);
  CHECK(sample_coefficients(m, 1, 0.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("PCA argument checks") {
  const SphericalGrid g = make_grid(8, 8);
  std::vector<Tsrvf> qs{path_tsrvf(g, 1, 8), path_tsrvf(g, 2, 8), path_tsrvf(g, 3, 8)};
  CHECK_THROWS_AS(pca(qs, qs[0], 3), Error);
  CHECK_THROWS_AS(pca(qs, qs[0], 0), Error);
  CHECK_THROWS_AS(pca({qs[0]}, qs[0], 1), Error);
}

TEST_CASE("fold assignment") {
  const std::vector<int> f = cv_folds(23, 5, 7);
  CHECK(f.size() == 23);
  std::vector<int> count(5, 0);
  for (int x : f) count[x]++;
  for (int c : count) CHECK((c == 4 || c == 5));
  CHECK(cv_folds(23, 5, 7) == f);
  CHECK(cv_folds(23, 5, 8) != f);
}

TEST_CASE("expressiveness CV reports every item once") {
  const SphericalGrid g = make_grid(8, 8);
  std::vector<Surface> items;
  for (int i = 0; i < 10; ++i) items.push_back(preshape_normalize(bumpy_surface(g, i, 0.2)));
  CvConfig cfg;
  cfg.k = 2;
  const CvResult a = expressiveness_cv(items, Representation::Surface, cfg);
  const CvResult b = expressiveness_cv(items, Representation::Srnf, cfg);
  CHECK(a.errors.size() == 10);
  CHECK(a.fold_means.size() == 5);
  CHECK(a.fold_of == b.fold_of);
  double mean = 0.0;
  for (double e : a.errors) mean += e / 10.0;
  CHECK(a.mean == doctest::Approx(mean));
  CHECK_THROWS_AS(expressiveness_cv(items, Representation::Tsrvf, cfg), Error);
}
