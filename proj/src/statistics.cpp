#include "f4d/statistics.hpp"

#include "f4d/error.hpp"
#include "f4d/parallel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace f4d {

namespace {

void require_shared(const std::vector<Tsrvf>& qs, const char* context) {
  for (const Tsrvf& q : qs) {
    require_same_grid(qs.front().grid, q.grid, context);
    if (q.size() != qs.front().size()) {
      throw Error(ErrorCode::InvalidArgument, std::string(context) + ": trajectories differ in length");
    }
  }
}

double squared_distance(const Tsrvf& a, const Tsrvf& b) {
  const Tsrvf d{a.grid, a.times, a.values - b.values};
  return std::max(0.0, tsrvf_inner(d, d));
}

// sqrt of the quadrature weight of each flattened entry of a trajectory.
Eigen::VectorXd trajectory_root_weights(const SphericalGrid& grid, const std::vector<double>& times) {
  const Eigen::VectorXd tw = time_weights(times);
  const Eigen::Index d = 3 * static_cast<Eigen::Index>(grid.size());
  Eigen::VectorXd w(tw.size() * d);
  for (Eigen::Index k = 0; k < tw.size(); ++k) w.segment(k * d, d).setConstant(std::sqrt(tw[k] * grid.chart_weight()));
  return w;
}

Eigen::VectorXd surface_root_weights(const SphericalGrid& grid) {
  Eigen::VectorXd w(3 * static_cast<Eigen::Index>(grid.size()));
  for (int i = 0; i < grid.nu(); ++i) {
    for (int j = 0; j < grid.nv(); ++j) w.segment(3 * grid.index(i, j), 3).setConstant(std::sqrt(grid.weight(i)));
  }
  return w;
}

Eigen::VectorXd flat(const FrameMatrix& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }
Eigen::VectorXd flat(const Field3& f) {
  Eigen::VectorXd out(f.size());
  for (Eigen::Index k = 0; k < f.rows(); ++k) out.segment(3 * k, 3) = f.row(k).transpose();
  return out;
}

// PCA of the rows of x, already multiplied by the root weights, so plain dot
// products are the metric.
struct FlatPca {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;  // orthonormal columns
  Eigen::VectorXd eigenvalues;
  bool rank_deficient = false;

  FlatPca(const Eigen::MatrixXd& x, const Eigen::VectorXd& centre, int k) : mean(centre) {
    const Eigen::Index n = x.rows();
    const Eigen::MatrixXd c = x.rowwise() - centre.transpose();
    const Eigen::MatrixXd gram = c * c.transpose() / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Eigen::VectorXd vals = eig.eigenvalues().reverse();
    const Eigen::MatrixXd vecs = eig.eigenvectors().rowwise().reverse();
    const double top = std::max(vals.size() ? vals[0] : 0.0, 0.0);
    int kept = 0;
    while (kept < k && kept < vals.size() && vals[kept] > 1e-12 * std::max(top, 1e-300) && vals[kept] > 1e-300) ++kept;
    rank_deficient = kept < k;
    eigenvalues = vals.head(kept);
    basis.resize(c.cols(), kept);
    for (int j = 0; j < kept; ++j) {
      Eigen::VectorXd e = c.transpose() * vecs.col(j);
      // Re-orthogonalize against earlier columns to hold 1e-8 orthonormality.
      for (int i = 0; i < j; ++i) e -= basis.col(i).dot(e) * basis.col(i);
      basis.col(j) = e / e.norm();
    }
  }

  double residual(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd d = x - mean;
    return (d - basis * (basis.transpose() * d)).norm();
  }
};

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

CvResult summarize(std::vector<double> errors, std::vector<int> fold_of, int folds) {
  CvResult r;
  const double n = static_cast<double>(errors.size());
  for (double e : errors) r.mean += e / n;
  for (double e : errors) r.std += (e - r.mean) * (e - r.mean) / n;
  r.std = std::sqrt(r.std);
  r.median = median_of(errors);
  r.fold_means.assign(folds, 0.0);
  std::vector<int> counts(folds, 0);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    r.fold_means[fold_of[i]] += errors[i];
    ++counts[fold_of[i]];
  }
  for (int f = 0; f < folds; ++f) r.fold_means[f] /= std::max(counts[f], 1);
  r.errors = std::move(errors);
  r.fold_of = std::move(fold_of);
  return r;
}

void require_cv(int n, const CvConfig& cfg) {
  if (cfg.folds < 2 || n < cfg.folds) {
    throw Error(ErrorCode::InsufficientData, "expressiveness_cv needs at least `folds` >= 2 items");
  }
  if (cfg.k < 1) throw Error(ErrorCode::InvalidArgument, "expressiveness_cv needs k >= 1");
}

// Leaves every fold out once; `fit` builds a model from training indices and
// `error` scores one held-out item against it.
template <class Fit, class Score>
CvResult cross_validate(int n, const CvConfig& cfg, Fit fit, Score score) {
  const std::vector<int> fold_of = cv_folds(n, cfg.folds, cfg.seed);
  std::vector<double> errors(n, 0.0);
  for (int f = 0; f < cfg.folds; ++f) {
    std::vector<int> train, test;
    for (int i = 0; i < n; ++i) (fold_of[i] == f ? test : train).push_back(i);
    if (train.size() < 2) throw Error(ErrorCode::InsufficientData, "a training split has fewer than two items");
    const auto model = fit(train);
    parallel_for(static_cast<int>(test.size()), [&](int t) { errors[test[t]] = score(model, test[t]); });
  }
  return summarize(std::move(errors), fold_of, cfg.folds);
}

}  // namespace

MeanResult karcher_mean(const std::vector<Tsrvf>& qs, const KarcherConfig& cfg) {
  if (qs.size() < 2) throw Error(ErrorCode::InsufficientData, "karcher_mean needs at least two trajectories");
  require_shared(qs, "karcher_mean");
  const int n = static_cast<int>(qs.size());
  int start = 0;
  if (cfg.random_init_seed) {
    std::mt19937_64 rng(*cfg.random_init_seed);
    start = static_cast<int>(rng() % static_cast<std::uint64_t>(n));
  }

  MeanResult out;
  out.mean_tsrvf = qs[start];
  out.aligned_tsrvfs = qs;
  out.warps.assign(n, TimeWarp::identity(qs.front().size()));
  auto cost_of = [&](const Tsrvf& mean) {
    double c = 0.0;
    for (const Tsrvf& a : out.aligned_tsrvfs) c += squared_distance(mean, a);
    return c;
  };
  out.cost_trace.push_back(cost_of(out.mean_tsrvf));

  for (int it = 1; it <= cfg.max_iter; ++it) {
    out.iterations = it;
    parallel_for(n, [&](int i) {
      const Alignment al = dp_align(out.mean_tsrvf, qs[i], cfg.align);
      Tsrvf candidate = warp_action(qs[i], al.warp);
      if (squared_distance(out.mean_tsrvf, candidate) < squared_distance(out.mean_tsrvf, out.aligned_tsrvfs[i])) {
        out.aligned_tsrvfs[i] = std::move(candidate);
        out.warps[i] = al.warp;
      }
    });

    Tsrvf mean{qs.front().grid, qs.front().times, FrameMatrix::Zero(qs.front().values.rows(), qs.front().values.cols())};
    for (const Tsrvf& a : out.aligned_tsrvfs) mean.values += a.values;
    mean.values /= static_cast<double>(n);

    const double old_norm = tsrvf_norm(out.mean_tsrvf);
    const double change = std::abs(tsrvf_norm(mean) - old_norm) / std::max(old_norm, 1e-300);
    out.mean_tsrvf = std::move(mean);
    out.cost_trace.push_back(cost_of(out.mean_tsrvf));
    if (change < cfg.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

void visualize_mean(MeanResult& mean, const Srnf& start, const InversionConfig& cfg) {
  const Trajectory h = tsrvf_inverse(mean.mean_tsrvf, start);
  std::vector<Srnf> frames;
  frames.reserve(h.size());
  for (int t = 0; t < h.size(); ++t) frames.push_back(h.frame(t));
  mean.mean_4d.clear();
  for (InversionResult& r : invert_trajectory(frames, cfg)) mean.mean_4d.push_back(std::move(r.surface));
}

PcaModel pca(const std::vector<Tsrvf>& aligned, const Tsrvf& mean, int k) {
  if (aligned.size() < 2) throw Error(ErrorCode::InsufficientData, "pca needs at least two trajectories");
  require_shared(aligned, "pca");
  require_same_grid(mean.grid, aligned.front().grid, "pca");
  const int n = static_cast<int>(aligned.size());
  if (k < 1 || k > n - 1) throw Error(ErrorCode::InvalidArgument, "pca: k must lie in [1, n - 1]");

  const Eigen::VectorXd w = trajectory_root_weights(mean.grid, mean.times);
  Eigen::MatrixXd x(n, w.size());
  for (int i = 0; i < n; ++i) x.row(i) = flat(aligned[i].values).cwiseProduct(w).transpose();
  const FlatPca fp(x, flat(mean.values).cwiseProduct(w), k);

  PcaModel model;
  model.mean = mean;
  model.eigenvalues = fp.eigenvalues;
  model.k = static_cast<int>(fp.eigenvalues.size());
  model.sample_size = n;
  model.rank_deficient = fp.rank_deficient;
  for (int j = 0; j < model.k; ++j) {
    const Eigen::VectorXd e = fp.basis.col(j).cwiseQuotient(w);
    Tsrvf ev{mean.grid, mean.times, FrameMatrix(mean.values.rows(), mean.values.cols())};
    Eigen::Map<Eigen::VectorXd>(ev.values.data(), ev.values.size()) = e;
    model.eigenvectors.push_back(std::move(ev));
  }
  return model;
}

PcaModel pca(const MeanResult& mean, int k) { return pca(mean.aligned_tsrvfs, mean.mean_tsrvf, k); }

std::vector<Tsrvf> principal_path(const PcaModel& model, int i, const std::vector<double>& taus) {
  if (i < 0 || i >= model.k) throw Error(ErrorCode::IndexOutOfRange, "principal_path: no such component");
  std::vector<Tsrvf> out;
  out.reserve(taus.size());
  const double s = std::sqrt(model.eigenvalues[i]);
  for (double tau : taus) {
    Tsrvf q = model.mean;
    if (tau != 0.0) q.values += tau * s * model.eigenvectors[i].values;
    out.push_back(std::move(q));
  }
  return out;
}

Eigen::VectorXd project(const PcaModel& model, const Tsrvf& q) {
  require_same_grid(model.mean.grid, q.grid, "project");
  const Tsrvf d{q.grid, q.times, q.values - model.mean.values};
  Eigen::VectorXd c(model.k);
  for (int i = 0; i < model.k; ++i) c[i] = tsrvf_inner(d, model.eigenvectors[i]) / std::sqrt(model.eigenvalues[i]);
  return c;
}

Tsrvf reconstruct(const PcaModel& model, const Eigen::VectorXd& coeffs, int k) {
  const int m = k < 0 ? model.k : std::min<int>(k, model.k);
  if (coeffs.size() < m) throw Error(ErrorCode::InvalidArgument, "reconstruct: too few coefficients");
  Tsrvf q = model.mean;
  for (int i = 0; i < m; ++i) {
    if (coeffs[i] != 0.0) q.values += coeffs[i] * std::sqrt(model.eigenvalues[i]) * model.eigenvectors[i].values;
  }
  return q;
}

Eigen::VectorXd sample_coefficients(const PcaModel& model, std::uint64_t seed, double clamp) {
  if (!(clamp >= 0.0)) throw Error(ErrorCode::InvalidArgument, "clamp must be nonnegative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd c(model.k);
  for (int i = 0; i < model.k; ++i) c[i] = std::clamp(normal(rng), -clamp, clamp);
  return c;
}

Tsrvf sample_random(const PcaModel& model, std::uint64_t seed, double clamp) {
  return reconstruct(model, sample_coefficients(model, seed, clamp));
}

std::vector<int> cv_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 1) throw Error(ErrorCode::InvalidArgument, "cv_folds needs folds >= 1");
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng() % static_cast<std::uint64_t>(i + 1)]);
  std::vector<int> fold_of(n);
  for (int j = 0; j < n; ++j) fold_of[perm[j]] = j % folds;
  return fold_of;
}

CvResult expressiveness_cv(const std::vector<Surface>& items, Representation mode, const CvConfig& cfg) {
  if (mode != Representation::Surface && mode != Representation::Srnf) {
    throw Error(ErrorCode::InvalidArgument, "surface datasets take the surface or srnf representation");
  }
  require_cv(static_cast<int>(items.size()), cfg);
  const SphericalGrid& grid = items.front().grid;
  for (const Surface& f : items) require_same_grid(grid, f.grid, "expressiveness_cv");

  const Eigen::VectorXd w = mode == Representation::Surface
                                ? surface_root_weights(grid)
                                : Eigen::VectorXd::Constant(3 * grid.size(), std::sqrt(grid.chart_weight()));
  std::vector<Eigen::VectorXd> x(items.size());
  parallel_for(static_cast<int>(items.size()), [&](int i) {
    const Field3& v = mode == Representation::Surface ? items[i].values : srnf_map(items[i]).values;
    x[i] = flat(v).cwiseProduct(w);
  });

  auto fit = [&](const std::vector<int>& train) {
    Eigen::MatrixXd m(train.size(), w.size());
    for (std::size_t r = 0; r < train.size(); ++r) m.row(r) = x[train[r]].transpose();
    const Eigen::VectorXd centre = m.colwise().mean().transpose();
    return FlatPca(m, centre, std::min<int>(cfg.k, static_cast<int>(train.size()) - 1));
  };
  return cross_validate(static_cast<int>(items.size()), cfg, fit,
                        [&](const FlatPca& model, int i) { return model.residual(x[i]); });
}

CvResult expressiveness_cv(const std::vector<Trajectory>& items, Representation mode, const CvConfig& cfg) {
  if (mode != Representation::Curve && mode != Representation::Tsrvf) {
    throw Error(ErrorCode::InvalidArgument, "trajectory datasets take the curve or tsrvf representation");
  }
  require_cv(static_cast<int>(items.size()), cfg);
  for (const Trajectory& h : items) {
    require_same_grid(items.front().grid, h.grid, "expressiveness_cv");
    if (h.size() != items.front().size()) throw Error(ErrorCode::InvalidArgument, "expressiveness_cv: lengths differ");
  }
  const int n = static_cast<int>(items.size());

  if (mode == Representation::Curve) {
    const Eigen::VectorXd w = trajectory_root_weights(items.front().grid, items.front().times);
    std::vector<Eigen::VectorXd> x(n);
    for (int i = 0; i < n; ++i) x[i] = flat(items[i].frames).cwiseProduct(w);
    auto fit = [&](const std::vector<int>& train) {
      Eigen::MatrixXd m(train.size(), w.size());
      for (std::size_t r = 0; r < train.size(); ++r) m.row(r) = x[train[r]].transpose();
      const Eigen::VectorXd centre = m.colwise().mean().transpose();
      return FlatPca(m, centre, std::min<int>(cfg.k, static_cast<int>(train.size()) - 1));
    };
    return cross_validate(n, cfg, fit, [&](const FlatPca& model, int i) { return model.residual(x[i]); });
  }

  std::vector<Tsrvf> qs(n);
  parallel_for(n, [&](int i) { qs[i] = tsrvf_map(items[i]); });
  auto fit = [&](const std::vector<int>& train) {
    std::vector<Tsrvf> sub;
    for (int i : train) sub.push_back(qs[i]);
    const MeanResult mean = karcher_mean(sub, cfg.karcher);
    return pca(mean, std::min<int>(cfg.k, static_cast<int>(sub.size()) - 1));
  };
  auto score = [&](const PcaModel& model, int i) {
    Tsrvf q = qs[i];
    if (cfg.align_test) q = warp_action(q, dp_align(model.mean, q, cfg.karcher.align).warp);
    return std::sqrt(squared_distance(q, reconstruct(model, project(model, q))));
  };
  return cross_validate(n, cfg, fit, score);
}

}  // namespace f4d
