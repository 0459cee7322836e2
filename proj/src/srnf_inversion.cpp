#include "f4d/srnf_inversion.hpp"

#include "f4d/error.hpp"
#include "f4d/harmonics.hpp"
#include "f4d/spatial_registration.hpp"
#include "finite_diff.hpp"

#include <cmath>
#include <limits>
#include <deque>
#include <numbers>

namespace f4d {

Eigen::VectorXd inversion_weights(const SphericalGrid& grid) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(grid.size());
  for (int i = 0; i < grid.nu(); ++i) {
    if (i < 2 || i >= grid.nu() - 2) w.segment(i * grid.nv(), grid.nv()).setConstant(0.5);
  }
  return w;
}

namespace {

// E(f) = sum_k w_k |Q(f)_k - q_k|^2 du dv and its gradient with respect to f.
struct Objective {
  const SphericalGrid& grid;
  const Field3& target;
  Eigen::VectorXd weights;

  double value(const Field3& f, Field3* grad) const {
    const Field3 a = detail::diff_u(grid, f);
    const Field3 b = detail::diff_v(grid, f);
    const Field3 n = detail::cross_rows(a, b);
    const double cw = grid.chart_weight();
    double e = 0.0;
    Field3 gn;
    if (grad) gn.resize(n.rows(), 3);
    for (Eigen::Index k = 0; k < n.rows(); ++k) {
      const Eigen::RowVector3d nk = n.row(k);
      const double len = nk.norm();
      Eigen::RowVector3d r;
      const bool live = len >= kDegeneracyEps;
      r = (live ? Eigen::RowVector3d(nk / std::sqrt(len)) : Eigen::RowVector3d::Zero()) - target.row(k);
      e += weights[k] * r.squaredNorm();
      if (grad) {
        if (live) {
          const double s = std::sqrt(len);
          gn.row(k) = 2.0 * weights[k] * cw * (r / s - 0.5 * r.dot(nk) * nk / (len * len * s));
        } else {
          gn.row(k).setZero();
        }
      }
    }
    if (grad) {
      *grad = detail::diff_u_adjoint(grid, detail::cross_rows(b, gn)) +
              detail::diff_v_adjoint(grid, detail::cross_rows(gn, a));
    }
    return e * cw;
  }
};

Surface centred(Surface f) {
  const Eigen::Vector3d c = area_centroid(f);
  f.values.rowwise() -= c.transpose();
  return f;
}

// Area-matched sphere, turned so its SRNF best matches q. Without the turn
// a shape whose poles sit elsewhere (an arm along x) stalls in a local
// minimum: the descent cannot rotate the parameterization.
Surface default_init(const Srnf& q) {
  const double area = q.values.squaredNorm() * q.grid.chart_weight();
  const double r = std::sqrt(std::max(area, 1e-12) / (4.0 * std::numbers::pi));
  const Surface sphere = sample_surface(q.grid, [r](double u, double v) {
    return Eigen::Vector3d(r * std::sin(u) * std::cos(v), r * std::sin(u) * std::sin(v), r * std::cos(u));
  });
  return rotate(sphere, optimal_rotation(q, srnf_map(sphere)).rotation);
}

}  // namespace

InversionResult invert_srnf(const Srnf& q, const InversionConfig& cfg) {
  if (!q.values.allFinite()) throw Error(ErrorCode::InvalidArgument, "invert_srnf: non-finite SRNF");
  if (!(cfg.step > 0.0) || !(cfg.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "invert_srnf: bad config");
  const SphericalGrid& grid = q.grid;
  const Surface init = cfg.init ? *cfg.init : default_init(q);
  require_same_grid(grid, init.grid, "invert_srnf");

  const Objective obj{grid, q.values, inversion_weights(grid)};
  const double qnorm2 = std::max((obj.weights.asDiagonal() * q.values).cwiseProduct(q.values).sum() *
                                     grid.chart_weight(),
                                 1e-300);
  const Eigen::MatrixXd basis = harmonic_values(grid, cfg.l_max);  // N x K

  // Coefficients are a K x 3 matrix flattened column-major.
  const Eigen::Index K = basis.cols();
  auto surface_of = [&](const Eigen::VectorXd& c) {
    Field3 f = init.values + basis * Eigen::Map<const Eigen::MatrixXd>(c.data(), K, 3);
    return f;
  };
  auto eval = [&](const Eigen::VectorXd& c, Eigen::VectorXd& g) {
    Field3 gf;
    const double e = obj.value(surface_of(c), &gf);
    Eigen::MatrixXd gc = basis.transpose() * gf;
    g = Eigen::Map<Eigen::VectorXd>(gc.data(), gc.size());
    return e;
  };

  InversionResult res;
  Eigen::VectorXd c = Eigen::VectorXd::Zero(K * 3), g;
  double e = eval(c, g);
  res.initial_residual = std::sqrt(e / qnorm2);
  res.energy_trace.push_back(e);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;  // (s, y)
  constexpr std::size_t kMemory = 12;
  bool first = true;
  for (int it = 0; it < cfg.max_iter; ++it) {
    res.iterations = it + 1;
    if (e <= 1e-28 * qnorm2 || g.norm() == 0.0) {
      res.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t m = memory.size(); m-- > 0;) {
      const auto& [s, y] = memory[m];
      alpha[m] = s.dot(d) / y.dot(s);
      d -= alpha[m] * y;
    }
    if (!memory.empty()) d *= memory.back().first.dot(memory.back().second) / memory.back().second.squaredNorm();
    for (std::size_t m = 0; m < memory.size(); ++m) {
      const auto& [s, y] = memory[m];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[m] - beta) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      memory.clear();
      d = -g;
      slope = -g.squaredNorm();
    }

    double t = first ? cfg.step / std::max(1.0, d.norm()) : 1.0;
    Eigen::VectorXd c_new, g_new;
    double e_new = e;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      c_new = c + t * d;
      e_new = eval(c_new, g_new);
      if (std::isfinite(e_new) && e_new <= e + 1e-4 * t * slope && e_new < e) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      res.converged = true;  // no descent direction left at working precision
      break;
    }
    first = false;
    const Eigen::VectorXd s = c_new - c, y = g_new - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (memory.size() > kMemory) memory.pop_front();
    }
    const double rel = (e - e_new) / e;
    c = std::move(c_new);
    g = std::move(g_new);
    e = e_new;
    res.energy_trace.push_back(e);
    if (rel < cfg.tol) {
      res.converged = true;
      break;
    }
  }

  res.surface = centred(Surface{grid, surface_of(c)});
  res.residual = std::sqrt(e / qnorm2);
  return res;
}

std::vector<InversionResult> invert_trajectory(const std::vector<Srnf>& qs, const InversionConfig& cfg) {
  if (qs.empty()) throw Error(ErrorCode::InvalidArgument, "invert_trajectory: empty sequence");
  std::vector<InversionResult> out;
  out.reserve(qs.size());
  InversionConfig frame_cfg = cfg;
  for (const Srnf& q : qs) {
    try {
      out.push_back(invert_srnf(q, frame_cfg));
      frame_cfg.init = out.back().surface;
    } catch (const Error&) {
      InversionResult failed;
      failed.surface = frame_cfg.init ? *frame_cfg.init : Surface{q.grid, Field3::Zero(q.grid.size(), 3)};
      failed.residual = std::numeric_limits<double>::infinity();
      failed.converged = false;
      out.push_back(std::move(failed));
    }
  }
  return out;
}

}  // namespace f4d
