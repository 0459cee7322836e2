#include "f4d/eval.hpp"

#include "f4d/error.hpp"
#include "f4d/parallel.hpp"
#include "f4d/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace f4d {

namespace {

using Json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t k = 1; k < trace.size(); ++k) {
    if (trace[k] > trace[k - 1]) return false;
  }
  return true;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Json stats_json(const SummaryStats& s) { return Json{{"mean", s.mean}, {"std", s.std}, {"median", s.median}}; }

}  // namespace

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  for (double x : values) s.mean += x;
  s.mean /= n;
  for (double x : values) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / n);
  s.median = median_of(values);
  return s;
}

std::vector<double> ExperimentReport::column(const std::string& name) const {
  std::vector<double> out;
  for (const Json& item : items) {
    if (item.contains(name) && item[name].is_number()) out.push_back(item[name].get<double>());
  }
  return out;
}

void ExperimentReport::summarize_columns(const std::vector<std::string>& columns) {
  summary.clear();
  for (const std::string& c : columns) summary[c] = summarize(column(c));
}

std::string ExperimentReport::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["config"] = config;
  Json sum = Json::object();
  for (const auto& [name, s] : summary) sum[name] = stats_json(s);
  j["summary"] = sum;
  j["metrics"] = metrics;
  j["items"] = items;
  return j.dump(2) + "\n";
}

std::string ExperimentReport::timings_json() const {
  Json j = Json::object();
  for (const auto& [name, t] : timings) j[name] = t;
  return j.dump(2) + "\n";
}

ExperimentReport eval_spatial(const SpatialEvalConfig& cfg) {
  if (cfg.trials < 1) throw Error(ErrorCode::InvalidArgument, "eval_spatial needs at least one trial");
  const auto t0 = Clock::now();
  const SphericalGrid grid = make_grid(cfg.nu, cfg.nv);
  const TangentBasis basis = make_tangent_basis(grid, cfg.registration.l_max);
  const SphereDiffeo identity = SphereDiffeo::identity(grid);

  ExperimentReport rep;
  rep.experiment = "spatial";
  rep.config = Json{{"seed", cfg.seed},
                    {"trials", cfg.trials},
                    {"grid", {cfg.nu, cfg.nv}},
                    {"magnitude", cfg.magnitude},
                    {"l_max", cfg.registration.l_max},
                    {"outer_iters", cfg.registration.outer_iters},
                    {"inner_max_iter", cfg.registration.inner.max_iter},
                    {"tol", cfg.registration.tol}};
  rep.items.resize(cfg.trials);

  static const char* families[] = {"bumpy_triaxial", "arm", "bumpy_round"};
  parallel_for(cfg.trials, [&](int i) {
    const std::uint64_t s = trial_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const int family = i % 3;
    ShapeFn fn;
    if (family == 0) {
      fn = bumpy_shape(trial_seed(s, 0), 0.15, 4, {1.2, 1.0, 0.8});
    } else if (family == 1) {
      fn = arm_shape({1.3, 0.45, 0.2, 0.8, -0.4, 0.5, 0.4});
    } else {
      fn = bumpy_shape(trial_seed(s, 0), 0.25, 4);
    }
    const Surface f1 = preshape_normalize(sample_shape(grid, fn));
    const SphereDiffeo gamma0 = random_sphere_diffeo(basis, trial_seed(s, 1), cfg.magnitude);
    const Surface f2 = preshape_normalize(sample_shape(gamma0, fn));
    const SphereDiffeo truth = invert(gamma0);

    const RegistrationResult r = register_pair(f1, f2, basis, cfg.registration);
    const double before = registration_error(identity, truth);
    const double after = registration_error(r.diffeo, truth);
    rep.items[i] = Json{{"trial", i},
                        {"family", families[family]},
                        {"seed", s},
                        {"before", before},
                        {"after", after},
                        {"ratio", before > 0.0 ? after / before : 0.0},
                        {"energy_initial", r.energy_trace.front()},
                        {"energy_final", r.energy_trace.back()},
                        {"energy_monotone", non_increasing(r.energy_trace)},
                        {"converged", r.converged}};
  });

  rep.summarize_columns({"before", "after", "ratio"});
  bool monotone = true;
  for (const Json& item : rep.items) monotone = monotone && item["energy_monotone"].get<bool>();
  const double mean_before = rep.summary["before"].mean, mean_after = rep.summary["after"].mean;
  const double ratio = mean_before > 0.0 ? mean_after / mean_before : 0.0;
  rep.metrics = Json{{"mean_after_over_mean_before", ratio},
                     {"energy_traces_monotone", monotone},
                     {"pass", ratio <= 0.1 && monotone}};
  rep.timings["total"] = seconds_since(t0);
  return rep;
}

ExperimentReport eval_temporal(const TemporalEvalConfig& cfg) {
  if (cfg.trials < 1) throw Error(ErrorCode::InvalidArgument, "eval_temporal needs at least one trial");
  const auto t0 = Clock::now();
  const SphericalGrid grid = make_grid(cfg.nu, cfg.nv);
  const int n = cfg.frames;

  ExperimentReport rep;
  rep.experiment = "temporal";
  rep.config = Json{{"seed", cfg.seed},
                    {"trials", cfg.trials},
                    {"grid", {cfg.nu, cfg.nv}},
                    {"frames", n},
                    {"warp_magnitude", cfg.warp_magnitude},
                    {"perturbation", cfg.perturbation},
                    {"refine", cfg.align.refine}};
  rep.items.resize(cfg.trials);

  auto tsrvf_of = [](const SurfaceSequence& s) { return tsrvf_map(Trajectory::from_surfaces(s.frames, s.times)); };
  parallel_for(cfg.trials, [&](int i) {
    const std::uint64_t s = trial_seed(cfg.seed, static_cast<std::uint64_t>(i));
    const double e = cfg.perturbation;
    const Eigen::Vector3d axes_b(1.3, 0.9, 0.8);
    const Surface a = preshape_normalize(bumpy_surface(grid, trial_seed(s, 0), 0.2, 4));
    const Surface b = preshape_normalize(bumpy_surface(grid, trial_seed(s, 1), 0.2, 4, axes_b));
    const Surface a2 = preshape_normalize(bumpy_surface(grid, trial_seed(s, 0), 0.2, 4, {1.0 + e, 1.0, 1.0 - e}));
    const Surface b2 =
        preshape_normalize(bumpy_surface(grid, trial_seed(s, 1), 0.2, 4, {1.3 - e, 0.9 + e, 0.8}));
    const TimeWarp xi0 = random_time_warp(n, trial_seed(s, 2), cfg.warp_magnitude);

    const SurfaceSequence alpha = interpolate_surfaces(a, b, n);
    const SurfaceSequence beta = interpolate_surfaces(a2, b2, n);
    const Tsrvf q1 = tsrvf_of(alpha);
    const Tsrvf q1w = tsrvf_of(warp_sequence(alpha, xi0));
    const Tsrvf q2 = tsrvf_of(beta);
    const Tsrvf q2w = tsrvf_of(warp_sequence(beta, xi0));

    const Alignment self = dp_align(q1, q1w, cfg.align);
    const Alignment cross = dp_align(q1, q2w, cfg.align);
    const double sup = (self.warp.samples - invert(xi0).samples).cwiseAbs().maxCoeff();
    rep.items[i] = Json{{"trial", i},
                        {"seed", s},
                        {"self_pre", self.unaligned_distance},
                        {"self_post", self.distance},
                        {"self_ratio", self.unaligned_distance > 0.0 ? self.distance / self.unaligned_distance : 0.0},
                        {"self_warp_sup_error", sup},
                        {"cross_pre", cross.unaligned_distance},
                        {"cross_post", cross.distance},
                        {"cross_baseline", tsrvf_distance(q1, q2)}};
  });

  rep.summarize_columns(
      {"self_pre", "self_post", "self_ratio", "self_warp_sup_error", "cross_pre", "cross_post", "cross_baseline"});
  const std::vector<double> ratios = rep.column("self_ratio");
  const double worst = ratios.empty() ? 0.0 : *std::max_element(ratios.begin(), ratios.end());
  const double med_post = rep.summary["cross_post"].median, med_base = rep.summary["cross_baseline"].median;
  const double base_ratio = med_base > 0.0 ? med_post / med_base : 0.0;
  rep.metrics = Json{{"max_self_ratio", worst},
                     {"median_post_over_median_baseline", base_ratio},
                     {"pass", worst <= 0.05 && base_ratio <= 1.1}};
  rep.timings["total"] = seconds_since(t0);
  return rep;
}

ExperimentReport eval_pca(const PcaEvalConfig& cfg) {
  const auto t0 = Clock::now();
  const SphericalGrid grid = make_grid(cfg.nu, cfg.nv);
  const int n = cfg.items;
  if (n < cfg.folds) throw Error(ErrorCode::InsufficientData, "eval_pca needs at least `folds` items");

  ExperimentReport rep;
  rep.experiment = "pca";
  rep.config = Json{{"seed", cfg.seed},   {"items", n},           {"folds", cfg.folds},
                    {"k", cfg.k},         {"grid", {cfg.nu, cfg.nv}}, {"frames", cfg.frames},
                    {"warp_magnitude", cfg.warp_magnitude}};

  // Bending family: slender arms, both hinges drawn uniformly.
  std::vector<Surface> arms(n);
  parallel_for(n, [&](int i) {
    std::mt19937_64 rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double a1 = 1.5 * unit(rng), a2 = 1.0 * unit(rng);
    arms[i] = preshape_normalize(arm_surface(grid, {1.6, 0.3, 0.2, a1, -0.4, a2, 0.3}));
  });

  // Rate-varied family: one-parameter shape change along a linear
  // interpolation, each item run at its own random rate.
  const std::uint64_t fam = trial_seed(cfg.seed, 1u << 20);
  const Surface a0 = preshape_normalize(bumpy_surface(grid, trial_seed(fam, 0), 0.2, 4));
  const Surface b0 = preshape_normalize(bumpy_surface(grid, trial_seed(fam, 1), 0.2, 4, {1.3, 0.9, 0.8}));
  const Surface d0 = preshape_normalize(bumpy_surface(grid, trial_seed(fam, 2), 0.2, 4, {0.9, 1.2, 1.0}));
  std::vector<Trajectory> paths(n);
  parallel_for(n, [&](int i) {
    const std::uint64_t s = trial_seed(fam, static_cast<std::uint64_t>(i) + 3);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> unit(0.0, 0.5);
    const double mix = unit(rng);
    const Surface b{grid, (1.0 - mix) * b0.values + mix * d0.values};
    const SurfaceSequence seq =
        warp_sequence(interpolate_surfaces(a0, b, cfg.frames), random_time_warp(cfg.frames, trial_seed(s, 1), cfg.warp_magnitude));
    paths[i] = Trajectory::from_surfaces(seq.frames, seq.times);
  });

  CvConfig cv;
  cv.folds = cfg.folds;
  cv.k = cfg.k;
  cv.seed = cfg.seed;
  cv.karcher = cfg.karcher;
  const CvResult surf = expressiveness_cv(arms, Representation::Surface, cv);
  const CvResult srnf = expressiveness_cv(arms, Representation::Srnf, cv);
  const CvResult curve = expressiveness_cv(paths, Representation::Curve, cv);
  const CvResult tsrvf = expressiveness_cv(paths, Representation::Tsrvf, cv);

  for (int i = 0; i < n; ++i) {
    rep.items.push_back(Json{{"family", "bending"},
                             {"item", i},
                             {"fold", surf.fold_of[i]},
                             {"surface_error", surf.errors[i]},
                             {"srnf_error", srnf.errors[i]}});
  }
  for (int i = 0; i < n; ++i) {
    rep.items.push_back(Json{{"family", "rate_varied"},
                             {"item", i},
                             {"fold", curve.fold_of[i]},
                             {"curve_error", curve.errors[i]},
                             {"tsrvf_error", tsrvf.errors[i]}});
  }
  rep.summarize_columns({"surface_error", "srnf_error", "curve_error", "tsrvf_error"});

  auto wins = [&](const CvResult& better, const CvResult& worse) {
    int w = 0;
    for (int f = 0; f < cfg.folds; ++f) w += better.fold_means[f] < worse.fold_means[f];
    return w;
  };
  const int bend_wins = wins(srnf, surf), rate_wins = wins(tsrvf, curve);
  const int need = cfg.folds - 1;
  rep.metrics = Json{{"fold_means",
                      {{"surface", surf.fold_means},
                       {"srnf", srnf.fold_means},
                       {"curve", curve.fold_means},
                       {"tsrvf", tsrvf.fold_means}}},
                     {"srnf_beats_surface_folds", bend_wins},
                     {"tsrvf_beats_curve_folds", rate_wins},
                     {"pass", bend_wins >= need && rate_wins >= need}};
  rep.timings["total"] = seconds_since(t0);
  return rep;
}

}  // namespace f4d
