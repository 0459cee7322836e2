#include "f4d/temporal.hpp"

#include "f4d/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace f4d {

namespace {

void require_times(const std::vector<double>& t, Eigen::Index rows, const char* context) {
  if (static_cast<Eigen::Index>(t.size()) != rows) {
    throw Error(ErrorCode::InvalidArgument, std::string(context) + ": time count does not match frame count");
  }
  for (std::size_t k = 1; k < t.size(); ++k) {
    if (!(t[k] > t[k - 1])) throw Error(ErrorCode::InvalidArgument, std::string(context) + ": times not increasing");
  }
}

// Locates s in the increasing table t: returns (k, lambda) with
// s = (1 - lambda) t_k + lambda t_{k+1}.
std::pair<int, double> locate(const std::vector<double>& t, double s) {
  const int n = static_cast<int>(t.size());
  if (!(s > t.front())) return {0, 0.0};  // also NaN
  if (s >= t.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const int k = static_cast<int>(it - t.begin()) - 1;
  return {k, (s - t[k]) / (t[k + 1] - t[k])};
}

// Derivative at x[c] of the quadratic through (x[a], x[b], x[c]) ordering
// given by the three indices, evaluated at index `at`.
double lagrange_weight(double x0, double x1, double x2, double at) {
  return (2.0 * at - x1 - x2) / ((x0 - x1) * (x0 - x2));
}

// Three-point derivative of rows of `f` at each time sample.
FrameMatrix time_derivative(const FrameMatrix& f, const std::vector<double>& t) {
  const int n = static_cast<int>(f.rows());
  FrameMatrix d(n, f.cols());
  if (n == 2) {
    d.row(0) = d.row(1) = (f.row(1) - f.row(0)) / (t[1] - t[0]);
    return d;
  }
  for (int k = 0; k < n; ++k) {
    const int a = k == 0 ? 0 : (k == n - 1 ? n - 3 : k - 1);
    const int i0 = a, i1 = a + 1, i2 = a + 2;
    const double x = t[k];
    const double w0 = lagrange_weight(t[i0], t[i1], t[i2], x);
    const double w1 = lagrange_weight(t[i1], t[i0], t[i2], x);
    const double w2 = lagrange_weight(t[i2], t[i0], t[i1], x);
    d.row(k) = w0 * f.row(i0) + w1 * f.row(i1) + w2 * f.row(i2);
  }
  return d;
}

Eigen::VectorXd warp_derivative(const TimeWarp& xi, const std::vector<double>& t) {
  FrameMatrix f(xi.size(), 1);
  f.col(0) = xi.samples;
  return time_derivative(f, t).col(0);
}

FrameMatrix interpolate_rows(const FrameMatrix& f, const std::vector<double>& t, const Eigen::VectorXd& at) {
  FrameMatrix out(at.size(), f.cols());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const auto [j, lam] = locate(t, at[k]);
    out.row(k) = (1.0 - lam) * f.row(j) + lam * f.row(j + 1);
  }
  return out;
}

std::vector<double> uniform_grid_like(const TimeWarp& xi) { return uniform_times(xi.size()); }

}  // namespace

Srnf Trajectory::frame(int t) const {
  Srnf q{grid, Field3(grid.size(), 3)};
  q.values = Eigen::Map<const Field3>(frames.row(t).data(), grid.size(), 3);
  return q;
}

Trajectory Trajectory::from_frames(const std::vector<Srnf>& fr, std::vector<double> times) {
  if (fr.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory without frames");
  Trajectory h{fr.front().grid, std::move(times), FrameMatrix(fr.size(), 3 * fr.front().grid.size())};
  require_times(h.times, h.frames.rows(), "Trajectory");
  for (std::size_t k = 0; k < fr.size(); ++k) {
    require_same_grid(h.grid, fr[k].grid, "Trajectory");
    h.frames.row(k) = Eigen::Map<const Eigen::RowVectorXd>(fr[k].values.data(), fr[k].values.size());
  }
  return h;
}

Trajectory Trajectory::from_surfaces(const std::vector<Surface>& fr, std::vector<double> times) {
  std::vector<Srnf> q;
  q.reserve(fr.size());
  for (const Surface& f : fr) q.push_back(srnf_map(f));
  return from_frames(q, std::move(times));
}

Field3 Tsrvf::frame(int t) const { return Eigen::Map<const Field3>(values.row(t).data(), grid.size(), 3); }

TimeWarp TimeWarp::identity(int n) {
  const std::vector<double> t = uniform_times(n);
  return {Eigen::Map<const Eigen::VectorXd>(t.data(), n)};
}

bool TimeWarp::is_valid() const {
  if (samples.size() < 2 || samples[0] != 0.0 || samples[samples.size() - 1] != 1.0) return false;
  for (Eigen::Index k = 1; k < samples.size(); ++k) {
    if (!(samples[k] > samples[k - 1])) return false;
  }
  return true;
}

double TimeWarp::operator()(double t) const {
  const int n = size();
  const double x = std::clamp(t, 0.0, 1.0) * (n - 1);
  const int k = std::min(static_cast<int>(std::floor(x)), n - 2);
  const double lam = x - k;
  return (1.0 - lam) * samples[k] + lam * samples[k + 1];
}

Eigen::VectorXd time_weights(const std::vector<double>& t) {
  const int n = static_cast<int>(t.size());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  for (int k = 0; k + 1 < n; ++k) {
    const double h = t[k + 1] - t[k];
    w[k] += 0.5 * h;
    w[k + 1] += 0.5 * h;
  }
  return w;
}

double tsrvf_inner(const Tsrvf& a, const Tsrvf& b) {
  require_same_grid(a.grid, b.grid, "tsrvf_inner");
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "tsrvf_inner: frame counts differ");
  const Eigen::VectorXd w = time_weights(a.times);
  return w.dot((a.values.cwiseProduct(b.values)).rowwise().sum()) * a.grid.chart_weight();
}

double tsrvf_norm(const Tsrvf& a) { return std::sqrt(std::max(0.0, tsrvf_inner(a, a))); }

double tsrvf_distance(const Tsrvf& a, const Tsrvf& b) {
  Tsrvf d{a.grid, a.times, a.values - b.values};
  return tsrvf_norm(d);
}

Tsrvf tsrvf_map(const Trajectory& h) {
  if (h.size() < 2) throw Error(ErrorCode::Degenerate, "tsrvf_map needs at least two frames");
  require_times(h.times, h.frames.rows(), "tsrvf_map");
  FrameMatrix v = time_derivative(h.frames, h.times);
  const double cw = h.grid.chart_weight();
  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    const double speed = std::sqrt(v.row(k).squaredNorm() * cw);
    if (speed < kDegeneracyEps) {
      v.row(k).setZero();
    } else {
      v.row(k) /= std::sqrt(speed);
    }
  }
  return {h.grid, h.times, std::move(v)};
}

Trajectory tsrvf_inverse(const Tsrvf& q, const Srnf& h0) {
  require_same_grid(q.grid, h0.grid, "tsrvf_inverse");
  if (!q.values.allFinite()) throw Error(ErrorCode::InvalidArgument, "tsrvf_inverse: non-finite field");
  const double cw = q.grid.chart_weight();
  FrameMatrix v(q.values.rows(), q.values.cols());
  for (Eigen::Index k = 0; k < v.rows(); ++k) v.row(k) = q.values.row(k) * std::sqrt(q.values.row(k).squaredNorm() * cw);

  Trajectory h{q.grid, q.times, FrameMatrix(q.values.rows(), q.values.cols())};
  h.frames.row(0) = Eigen::Map<const Eigen::RowVectorXd>(h0.values.data(), h0.values.size());
  for (Eigen::Index k = 1; k < v.rows(); ++k) {
    h.frames.row(k) = h.frames.row(k - 1) + 0.5 * (q.times[k] - q.times[k - 1]) * (v.row(k - 1) + v.row(k));
  }
  return h;
}

Tsrvf warp_action(const Tsrvf& q, const TimeWarp& xi) {
  if (!xi.is_valid()) throw Error(ErrorCode::NonMonotoneWarp, "warp is not strictly increasing with fixed endpoints");
  if (xi.size() != q.size()) throw Error(ErrorCode::InvalidArgument, "warp_action: warp length differs from frames");
  const Eigen::VectorXd rate = warp_derivative(xi, q.times);
  Tsrvf out{q.grid, q.times, interpolate_rows(q.values, q.times, xi.samples)};
  for (Eigen::Index k = 0; k < rate.size(); ++k) out.values.row(k) *= std::sqrt(std::max(rate[k], 0.0));
  return out;
}

Trajectory warp_trajectory(const Trajectory& h, const TimeWarp& xi) {
  if (!xi.is_valid()) throw Error(ErrorCode::NonMonotoneWarp, "warp is not strictly increasing with fixed endpoints");
  if (xi.size() != h.size()) throw Error(ErrorCode::InvalidArgument, "warp_trajectory: warp length differs");
  return {h.grid, h.times, interpolate_rows(h.frames, h.times, xi.samples)};
}

TimeWarp compose(const TimeWarp& outer, const TimeWarp& inner) {
  TimeWarp out{Eigen::VectorXd(inner.size())};
  for (int k = 0; k < inner.size(); ++k) out.samples[k] = outer(inner.samples[k]);
  out.samples[0] = 0.0;
  out.samples[out.size() - 1] = 1.0;
  return out;
}

TimeWarp invert(const TimeWarp& xi) {
  const std::vector<double> t = uniform_grid_like(xi);
  const std::vector<double> table(xi.samples.data(), xi.samples.data() + xi.size());
  TimeWarp out{Eigen::VectorXd(xi.size())};
  for (int k = 0; k < xi.size(); ++k) {
    const auto [j, lam] = locate(table, t[k]);
    out.samples[k] = (1.0 - lam) * t[j] + lam * t[j + 1];
  }
  out.samples[0] = 0.0;
  out.samples[out.size() - 1] = 1.0;
  return out;
}

Trajectory resample(const Trajectory& h, int n) {
  const std::vector<double> t = uniform_times(n);
  return {h.grid, t, interpolate_rows(h.frames, h.times, Eigen::Map<const Eigen::VectorXd>(t.data(), n))};
}

Tsrvf resample(const Tsrvf& q, int n) {
  const std::vector<double> t = uniform_times(n);
  return {q.grid, t, interpolate_rows(q.values, q.times, Eigen::Map<const Eigen::VectorXd>(t.data(), n))};
}

const std::vector<std::pair<int, int>>& dp_steps() {
  static const std::vector<std::pair<int, int>> steps = [] {
    std::vector<std::pair<int, int>> s;
    for (int a = 1; a <= 3; ++a) {
      for (int b = 1; b <= 3; ++b) {
        if (std::gcd(a, b) == 1) s.emplace_back(a, b);
      }
    }
    return s;
  }();
  return steps;
}

DpCostModel::DpCostModel(const Tsrvf& q1, const Tsrvf& q2) : n_(q1.size()), t_(q1.times) {
  require_same_grid(q1.grid, q2.grid, "dp_align");
  if (q1.size() < 2) throw Error(ErrorCode::Degenerate, "dp_align needs at least two time samples");
  if (q2.size() != q1.size()) throw Error(ErrorCode::InvalidArgument, "dp_align: resample to a common length first");
  for (int k = 0; k < n_; ++k) {
    if (std::abs(q1.times[k] - q2.times[k]) > 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "dp_align: time grids differ");
    }
  }
  const double cw = q1.grid.chart_weight();
  norm1_ = q1.values.rowwise().squaredNorm() * cw;
  g12_ = q1.values * q2.values.transpose() * cw;
  g22_ = q2.values * q2.values.transpose() * cw;
}

double DpCostModel::segment_cost(int k, int l, int i, int j) const {
  const double m = (t_[j] - t_[l]) / (t_[i] - t_[k]);
  const double sm = std::sqrt(m);
  double cost = 0.0;
  for (int p = k; p <= i; ++p) {
    const double w = 0.5 * ((p < i ? t_[p + 1] - t_[p] : 0.0) + (p > k ? t_[p] - t_[p - 1] : 0.0));
    const double s = std::min(t_[l] + m * (t_[p] - t_[k]), t_[j]);
    int j0 = l;
    while (j0 + 1 < j && t_[j0 + 1] <= s) ++j0;
    const double lam = std::clamp((s - t_[j0]) / (t_[j0 + 1] - t_[j0]), 0.0, 1.0);
    const double n2 = (1 - lam) * (1 - lam) * g22_(j0, j0) + 2 * lam * (1 - lam) * g22_(j0, j0 + 1) +
                      lam * lam * g22_(j0 + 1, j0 + 1);
    const double cross = (1 - lam) * g12_(p, j0) + lam * g12_(p, j0 + 1);
    cost += w * std::max(0.0, norm1_[p] + m * n2 - 2.0 * sm * cross);
  }
  return cost;
}

namespace {

// Row k of q2 (.) xi as coefficients over q2's frames, as warp_action builds it.
Eigen::MatrixXd action_weights(const TimeWarp& xi, const std::vector<double>& t) {
  const int n = xi.size();
  const Eigen::VectorXd rate = warp_derivative(xi, t);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const auto [j, lam] = locate(t, xi.samples[k]);
    const double r = std::sqrt(std::max(rate[k], 0.0));
    w(k, j) += r * (1.0 - lam);
    w(k, j + 1) += r * lam;
  }
  return w;
}

// xi with interval slopes proportional to exp(z).
TimeWarp warp_from_log_slopes(const Eigen::VectorXd& z, const std::vector<double>& t) {
  const int n = static_cast<int>(t.size());
  TimeWarp xi{Eigen::VectorXd::Zero(n)};
  for (int k = 1; k < n; ++k) xi.samples[k] = xi.samples[k - 1] + (t[k] - t[k - 1]) * std::exp(z[k - 1]);
  xi.samples /= xi.samples[n - 1];
  xi.samples[0] = 0.0;
  xi.samples[n - 1] = 1.0;
  return xi;
}

struct WarpEnergy {
  const DpCostModel& model;
  const Eigen::VectorXd& tw;

  double operator()(const Eigen::MatrixXd& w) const {
    const Eigen::MatrixXd wg = w * model.gram22();
    double e = 0.0;
    for (int k = 0; k < w.rows(); ++k) {
      e += tw[k] * (model.norms1()[k] - 2.0 * w.row(k).dot(model.gram12().row(k)) + wg.row(k).dot(w.row(k)));
    }
    return std::max(e, 0.0);
  }
};

// Damped Gauss-Newton on the log interval slopes of xi. Works on frame
// coefficients against the Gram matrices, never on full fields.
TimeWarp refine_lattice_warp(const DpCostModel& model, const TimeWarp& start, const std::vector<double>& t,
                             const AlignOptions& options, double& energy) {
  const int n = model.size();
  const Eigen::VectorXd tw = time_weights(t);
  const WarpEnergy energy_of{model, tw};

  Eigen::VectorXd z(n - 1);
  for (int k = 0; k + 1 < n; ++k) z[k] = std::log((start.samples[k + 1] - start.samples[k]) / (t[k + 1] - t[k]));
  TimeWarp xi = warp_from_log_slopes(z, t);
  Eigen::MatrixXd w = action_weights(xi, t);
  double e = energy_of(w);
  double lambda = 1e-3;
  const double h = 1e-7;
  std::vector<Eigen::MatrixXd> dw(n - 1);
  for (int it = 0; it < options.max_iter; ++it) {
    for (int p = 0; p + 1 < n; ++p) {
      Eigen::VectorXd zp = z;
      zp[p] += h;
      dw[p] = (action_weights(warp_from_log_slopes(zp, t), t) - w) / h;
    }
    const Eigen::MatrixXd resid_g = w * model.gram22() - model.gram12();
    Eigen::MatrixXd a(n - 1, n - 1);
    Eigen::VectorXd g(n - 1);
    for (int p = 0; p + 1 < n; ++p) {
      const Eigen::MatrixXd mp = tw.asDiagonal() * dw[p] * model.gram22();
      g[p] = (tw.asDiagonal() * dw[p]).cwiseProduct(resid_g).sum();
      for (int q = 0; q <= p; ++q) a(p, q) = a(q, p) = mp.cwiseProduct(dw[q]).sum();
    }

    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries) {
      Eigen::MatrixXd damped = a;
      damped.diagonal().array() += lambda * std::max(a.diagonal().maxCoeff(), 1e-300);
      const Eigen::VectorXd trial = z - damped.ldlt().solve(g);
      const TimeWarp xt = warp_from_log_slopes(trial, t);
      // A huge step overflows exp(z) and leaves NaN samples.
      if (!xt.samples.allFinite() || !xt.is_valid()) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::MatrixXd wt = action_weights(xt, t);
      const double et = energy_of(wt);
      if (std::isfinite(et) && et < e) {
        const double rel = (e - et) / std::max(e, 1e-300);
        z = trial;
        xi = xt;
        w = wt;
        e = et;
        lambda = std::max(lambda / 3.0, 1e-9);
        accepted = true;
        if (rel < 1e-8) it = options.max_iter;
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) break;
  }
  energy = e;
  return xi;
}

}  // namespace

TimeWarp refine_warp(const Tsrvf& q1, const Tsrvf& q2, const TimeWarp& start, const AlignOptions& options) {
  const DpCostModel model(q1, q2);
  if (!start.is_valid() || start.size() != model.size()) {
    throw Error(ErrorCode::NonMonotoneWarp, "refine_warp: invalid starting warp");
  }
  if (model.size() < 4) return start;
  double e = 0.0;
  return refine_lattice_warp(model, start, q1.times, options, e);
}

Alignment dp_align(const Tsrvf& q1, const Tsrvf& q2, const AlignOptions& options) {
  const DpCostModel model(q1, q2);
  const int n = model.size();
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Constant(n, n, inf);
  Eigen::MatrixXi from = Eigen::MatrixXi::Constant(n, n, -1);
  best(0, 0) = 0.0;
  const auto& steps = dp_steps();
  for (int i = 1; i < n; ++i) {
    for (int j = 1; j < n; ++j) {
      for (int s = 0; s < static_cast<int>(steps.size()); ++s) {
        const int k = i - steps[s].first, l = j - steps[s].second;
        if (k < 0 || l < 0 || best(k, l) == inf) continue;
        const double c = best(k, l) + model.segment_cost(k, l, i, j);
        if (c < best(i, j)) {
          best(i, j) = c;
          from(i, j) = s;
        }
      }
    }
  }

  Alignment out;
  for (int i = n - 1, j = n - 1;;) {
    out.path.emplace_back(i, j);
    if (i == 0 && j == 0) break;
    const auto [a, b] = steps[from(i, j)];
    i -= a;
    j -= b;
  }
  std::reverse(out.path.begin(), out.path.end());

  const std::vector<double>& t = q1.times;
  out.warp.samples.resize(n);
  for (std::size_t s = 0; s + 1 < out.path.size(); ++s) {
    const auto [k, l] = out.path[s];
    const auto [i, j] = out.path[s + 1];
    for (int p = k; p <= i; ++p) {
      out.warp.samples[p] = t[l] + (t[j] - t[l]) * (t[p] - t[k]) / (t[i] - t[k]);
    }
  }
  out.warp.samples[0] = 0.0;
  out.warp.samples[n - 1] = 1.0;
  out.lattice_distance = std::sqrt(best(n - 1, n - 1));
  out.unaligned_distance = tsrvf_distance(q1, q2);

  if (options.refine && n >= 4) {
    const Eigen::VectorXd tw = time_weights(t);
    const WarpEnergy energy_of{model, tw};
    const double e_lattice = energy_of(action_weights(out.warp, t));
    double e_smooth = 0.0;
    TimeWarp smooth = refine_lattice_warp(model, out.warp, t, options, e_smooth);
    if (e_smooth < e_lattice && smooth.is_valid()) {
      out.warp = std::move(smooth);
      out.refined = true;
    }
  }
  out.distance = tsrvf_distance(q1, warp_action(q2, out.warp));
  return out;
}

std::vector<Tsrvf> geodesic(const Tsrvf& q1, const Tsrvf& q2, int n_steps) {
  require_same_grid(q1.grid, q2.grid, "geodesic");
  if (q1.size() != q2.size()) throw Error(ErrorCode::InvalidArgument, "geodesic: frame counts differ");
  if (n_steps < 2) throw Error(ErrorCode::InvalidArgument, "geodesic needs at least two steps");
  std::vector<Tsrvf> path;
  path.reserve(n_steps);
  for (int k = 0; k < n_steps; ++k) {
    const double tau = static_cast<double>(k) / (n_steps - 1);
    if (k == 0) {
      path.push_back(q1);
    } else if (k == n_steps - 1) {
      path.push_back(q2);
    } else {
      path.push_back({q1.grid, q1.times, (1.0 - tau) * q1.values + tau * q2.values});
    }
  }
  return path;
}

GeodesicResult register_and_geodesic(const SurfaceSequence& a1, const SurfaceSequence& a2, const GeodesicConfig& cfg) {
  if (a1.frames.size() < 2 || a2.frames.size() < 2) {
    throw Error(ErrorCode::Degenerate, "register_and_geodesic needs at least two frames per sequence");
  }
  require_same_grid(a1.grid(), a2.grid(), "register_and_geodesic");

  auto normalized = [](const SurfaceSequence& s) {
    std::vector<Surface> out;
    out.reserve(s.frames.size());
    for (const Surface& f : s.frames) out.push_back(preshape_normalize(f));
    return out;
  };
  std::vector<Surface> f1 = normalized(a1), f2 = normalized(a2);

  // (1) spatial registration to a shared reference, a1's first frame.
  if (cfg.spatial) {
    const Surface reference = f1.front();
    f1 = register_trajectory(f1, reference, cfg.registration).registered;
    f2 = register_trajectory(f2, reference, cfg.registration).registered;
  }

  GeodesicResult res;
  res.h1 = Trajectory::from_surfaces(f1, a1.times);
  res.h2 = Trajectory::from_surfaces(f2, a2.times);
  const int n = cfg.frames > 0 ? cfg.frames : res.h1.size();
  res.h1 = resample(res.h1, n);
  res.h2 = resample(res.h2, n);

  // (2) temporal alignment.
  res.q1 = tsrvf_map(res.h1);
  res.q2 = tsrvf_map(res.h2);
  const Alignment al = dp_align(res.q1, res.q2);
  res.warp = al.warp;
  res.q2_aligned = warp_action(res.q2, al.warp);
  res.h2_aligned = warp_trajectory(res.h2, al.warp);
  res.distance_before = al.unaligned_distance;
  res.distance_after = al.distance;

  // (3) straight-line geodesic, mapped back through the TSRVF inverse.
  res.tsrvf_path = geodesic(res.q1, res.q2_aligned, cfg.steps);
  for (int k = 0; k < cfg.steps; ++k) {
    const double tau = static_cast<double>(k) / (cfg.steps - 1);
    res.taus.push_back(tau);
    Srnf start = res.h1.frame(0);
    start.values = (1.0 - tau) * start.values + tau * res.h2_aligned.frame(0).values;
    res.srnf_path.push_back(tsrvf_inverse(res.tsrvf_path[k], start));
  }

  // (4) visualization through SRNF inversion, warm-started along t and tau.
  if (cfg.visualize) {
    InversionConfig inv = cfg.inversion;
    inv.init = f1.front();
    for (int k = 0; k < cfg.steps; ++k) {
      std::vector<Srnf> frames;
      for (int t = 0; t < n; ++t) frames.push_back(res.srnf_path[k].frame(t));
      const std::vector<InversionResult> row = invert_trajectory(frames, inv);
      std::vector<Surface> surfaces;
      std::vector<double> residuals;
      for (const InversionResult& r : row) {
        surfaces.push_back(r.surface);
        residuals.push_back(r.residual);
        res.inversion_converged = res.inversion_converged && r.converged;
      }
      inv.init = surfaces.front();
      res.surfaces.push_back(std::move(surfaces));
      res.residuals.push_back(std::move(residuals));
    }
  }
  return res;
}

}  // namespace f4d
