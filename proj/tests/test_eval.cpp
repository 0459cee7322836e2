#include "f4d/eval.hpp"
#include "f4d/parallel.hpp"
#include "f4d/synthetic.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

using namespace f4d;

TEST_CASE("summary statistics") {
  const SummaryStats s = summarize({1.0, 2.0, 4.0, 9.0});
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.median == doctest::Approx(3.0));
  CHECK(s.std == doctest::Approx(std::sqrt((9.0 + 4.0 + 0.0 + 25.0) / 4.0)));
  CHECK(summarize({5.0}).median == 5.0);
}

TEST_CASE("trial seeds follow the splitting rule") {
  CHECK(trial_seed(7, 0) == 7u);
  CHECK(trial_seed(7, 3) == (7u ^ (3u * 0x9E3779B97F4A7C15ull)));
}

TEST_CASE("parallel_for covers every index and rethrows") {
  const int saved = thread_count();
  set_thread_count(3);
  std::vector<int> hits(100, 0);
  parallel_for(100, [&](int i) { hits[i]++; });
  for (int h : hits) CHECK(h == 1);
  std::atomic<int> inner{0};
  parallel_for(4, [&](int) { parallel_for(5, [&](int) { inner++; }); });
  CHECK(inner == 20);
  CHECK_THROWS_AS(parallel_for(10, [](int i) { if (i == 6) throw std::runtime_error("x"); }), std::runtime_error);
  set_thread_count(saved);
}

TEST_CASE("spatial report with no perturbation") {
  SpatialEvalConfig cfg;
  cfg.trials = 3;
  cfg.nu = cfg.nv = 16;
  cfg.magnitude = 0.0;
  cfg.registration.l_max = 2;
  cfg.registration.outer_iters = 2;
  const ExperimentReport r = eval_spatial(cfg);
  REQUIRE(r.items.size() == 3);
  for (const auto& item : r.items) CHECK(item["after"].get<double>() <= 1e-6);
  CHECK(r.items[1]["family"] == "arm");
}

TEST_CASE("temporal report: zero warp leaves the self pair unchanged") {
  TemporalEvalConfig cfg;
  cfg.trials = 2;
  cfg.nu = cfg.nv = 8;
  cfg.frames = 12;
  cfg.warp_magnitude = 0.0;
  const ExperimentReport r = eval_temporal(cfg);
  for (const auto& item : r.items) {
    CHECK(std::abs(item["self_pre"].get<double>() - item["self_post"].get<double>()) <= 1e-9);
  }
}

TEST_CASE("report summaries are recomputable from the items") {
  TemporalEvalConfig cfg;
  cfg.seed = 5;
  cfg.trials = 3;
  cfg.nu = cfg.nv = 8;
  cfg.frames = 12;
  ExperimentReport r = eval_temporal(cfg);
  const std::vector<double> col = r.column("cross_post");
  REQUIRE(col.size() == 3);
  const SummaryStats s = summarize(col);
  CHECK(r.summary["cross_post"].mean == s.mean);
  CHECK(r.summary["cross_post"].median == s.median);
  CHECK(r.summary["cross_post"].std == s.std);
  const std::string json = r.to_json();
  CHECK(json.find("timings") == std::string::npos);
  CHECK(eval_temporal(cfg).to_json() == json);
  CHECK(r.timings_json().find("total") != std::string::npos);
}

TEST_CASE("pca report shape") {
  PcaEvalConfig cfg;
  cfg.items = 6;
  cfg.folds = 3;
  cfg.nu = cfg.nv = 8;
  cfg.frames = 8;
  cfg.karcher.max_iter = 2;
  const ExperimentReport r = eval_pca(cfg);
  CHECK(r.items.size() == 12);
  CHECK(r.metrics.contains("pass"));
  cfg.items = 2;
  CHECK_THROWS(eval_pca(cfg));
}
