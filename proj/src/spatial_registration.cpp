#include "f4d/spatial_registration.hpp"

#include "f4d/error.hpp"
#include "f4d/harmonics.hpp"
#include "f4d/parallel.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace f4d {

Field3 TangentBasis::combine(const Eigen::VectorXd& coeffs) const {
  Field3 out = Field3::Zero(grid.size(), 3);
  for (int i = 0; i < size(); ++i) out += coeffs[i] * elements[i];
  return out;
}

TangentBasis make_tangent_basis(const SphericalGrid& grid, int l_max) {
  if (l_max < 1) throw Error(ErrorCode::InvalidArgument, "tangent basis needs l_max >= 1");
  TangentBasis basis{grid, {}, l_max};
  std::vector<Field3> grads = harmonic_gradients(grid, l_max);
  for (int l = 1; l <= l_max; ++l) {
    for (int m = -l; m <= l; ++m) {
      Field3 b = grads[harmonic_index(l, m)];
      const double before = std::sqrt(sphere_inner(grid, b, b));
      for (const Field3& e : basis.elements) b -= sphere_inner(grid, b, e) * e;
      const double norm = std::sqrt(sphere_inner(grid, b, b));
      if (norm <= 1e-10 * std::max(before, 1.0)) continue;
      basis.elements.push_back(b / norm);
    }
  }
  return basis;
}

RotationFit optimal_rotation(const Srnf& q1, const Srnf& q2) {
  require_same_grid(q1.grid, q2.grid, "optimal_rotation");
  const Eigen::Matrix3d a = q1.values.transpose() * q2.values * q1.grid.chart_weight();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) v.col(2) = -v.col(2);
  Eigen::Matrix3d r = u * v.transpose();
  // Re-orthonormalize away the SVD round-off.
  Eigen::JacobiSVD<Eigen::Matrix3d> clean(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  r = clean.matrixU() * clean.matrixV().transpose();

  const Eigen::Vector3d s = svd.singularValues();
  const double scale = std::max(s[0], 1e-300);
  RotationFit fit{Rotation3::from_matrix(r, 1e-8), false};
  fit.rank_deficient = s[1] / scale < 1e-12 || std::abs(s[0] - s[1]) / scale < 1e-12 ||
                       std::abs(s[1] - s[2]) / scale < 1e-12;
  return fit;
}

namespace {

double energy(const SphericalGrid& g, const Field3& q1, const Field3& q2) {
  const double d = (q1 - q2).squaredNorm() * g.chart_weight();
  return d;
}

}  // namespace

DiffeoSearch register_diffeo(const Srnf& q1, const Srnf& q2, const TangentBasis& basis,
                             const DiffeoSearchOptions& options, const SphereDiffeo* initial) {
  require_same_grid(q1.grid, q2.grid, "register_diffeo");
  require_same_grid(q1.grid, basis.grid, "register_diffeo");
  if (!(options.step > 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  const SphericalGrid& grid = q1.grid;

  DiffeoSearch out;
  out.diffeo = initial ? *initial : SphereDiffeo::identity(grid);
  Field3 current = initial ? srnf_group_action(q2, *initial, options.interpolation).values : q2.values;
  double e = energy(grid, q1.values, current);
  out.energy_trace.push_back(e);
  if (e <= 1e-14 * std::max(1.0, q1.values.squaredNorm() * grid.chart_weight())) {
    out.converged = true;
    return out;
  }

  // Probes gamma o (gamma_id + delta b_i) are differenced along the same path
  // the line search takes, q2 * (gamma o ...), so the slope matches the
  // discrete energy being minimized.
  const int nb = basis.size();
  std::vector<SphereDiffeo> probes;
  probes.reserve(nb);
  for (const Field3& b : basis.elements) probes.push_back(SphereDiffeo::displacement(grid, b, options.fd_delta));

  double step = options.step;
  std::vector<Field3> dphi(nb);
  for (int it = 0; it < options.max_iter; ++it) {
    out.iterations = it + 1;
    const Field3 residual = q1.values - current;
    Eigen::VectorXd grad(nb);
    parallel_for(nb, [&](int i) {
      const Field3 probed = srnf_group_action(q2, compose(out.diffeo, probes[i]), options.interpolation).values;
      dphi[i] = (probed - current) / options.fd_delta;
      grad[i] = l2_inner(grid, residual, dphi[i]);
    });

    Eigen::VectorXd dir = grad;
    if (options.direction == DescentDirection::GaussNewton) {
      Eigen::MatrixXd gram(nb, nb);
      for (int i = 0; i < nb; ++i) {
        for (int j = 0; j <= i; ++j) gram(i, j) = gram(j, i) = l2_inner(grid, dphi[i], dphi[j]);
      }
      const double damp = 1e-6 * std::max(gram.diagonal().maxCoeff(), 1e-300);
      gram.diagonal().array() += damp;
      dir = gram.ldlt().solve(grad);
    }
    const Field3 update = basis.combine(dir);

    bool accepted = false;
    while (step >= 1e-12) {
      SphereDiffeo trial = compose(out.diffeo, SphereDiffeo::displacement(grid, update, step));
      if (trial.is_valid()) {
        Field3 moved = srnf_group_action(q2, trial, options.interpolation).values;
        const double e_new = energy(grid, q1.values, moved);
        if (e_new < e) {
          const double rel = (e - e_new) / e;
          out.diffeo = std::move(trial);
          current = std::move(moved);
          e = e_new;
          out.energy_trace.push_back(e);
          accepted = true;
          if (rel < options.tol) out.converged = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted || out.converged) break;
    if (options.direction == DescentDirection::GaussNewton) step = std::min(1.0, 2.0 * step);
  }
  return out;
}

RegistrationResult register_pair(const Surface& f1, const Surface& f2, const RegistrationConfig& cfg) {
  require_same_grid(f1.grid, f2.grid, "register_pair");
  return register_pair(f1, f2, make_tangent_basis(f1.grid, cfg.l_max), cfg);
}

RegistrationResult register_pair(const Surface& f1, const Surface& f2, const TangentBasis& basis,
                                 const RegistrationConfig& cfg) {
  require_same_grid(f1.grid, f2.grid, "register_pair");
  const SphericalGrid& grid = f1.grid;
  const Srnf q1 = srnf_map(f1);
  const Srnf q2 = srnf_map(f2);

  RegistrationResult res;
  res.diffeo = SphereDiffeo::identity(grid);
  double e = energy(grid, q1.values, q2.values);
  res.energy_trace.push_back(e);
  const double floor = 1e-14 * std::max(1.0, q1.values.squaredNorm() * grid.chart_weight());
  if (e <= floor) {
    res.converged = true;
    return res;
  }

  for (int round = 0; round < cfg.outer_iters; ++round) {
    const double e_round = e;
    const Srnf moved = srnf_group_action(q2, res.diffeo, cfg.inner.interpolation);
    res.rotation = optimal_rotation(q1, moved).rotation;
    const double e_rot = energy(grid, q1.values, rotate(moved, res.rotation).values);
    if (e_rot < e) {
      e = e_rot;
      res.energy_trace.push_back(e);
    }

    const Srnf q2r = rotate(q2, res.rotation);
    DiffeoSearch inner = register_diffeo(q1, q2r, basis, cfg.inner, &res.diffeo);
    res.diffeo = std::move(inner.diffeo);
    for (std::size_t k = 1; k < inner.energy_trace.size(); ++k) res.energy_trace.push_back(inner.energy_trace[k]);
    e = inner.energy_trace.back();

    if (e <= floor || (e_round - e) / e_round < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

Surface apply_registration(const Surface& f, const RegistrationResult& r, Interpolation kind) {
  return rotate(apply_diffeo_surface(f, r.diffeo, kind), r.rotation);
}

TrajectoryRegistration register_trajectory(const std::vector<Surface>& frames, const Surface& reference,
                                           const RegistrationConfig& cfg) {
  if (frames.empty()) throw Error(ErrorCode::InvalidArgument, "register_trajectory: no frames");
  for (const Surface& f : frames) require_same_grid(reference.grid, f.grid, "register_trajectory");
  const TangentBasis basis = make_tangent_basis(reference.grid, cfg.l_max);

  TrajectoryRegistration out;
  RegistrationResult first = register_pair(reference, frames.front(), basis, cfg);
  out.registered.reserve(frames.size());
  for (const Surface& f : frames) out.registered.push_back(apply_registration(f, first, cfg.inner.interpolation));
  out.results.push_back(std::move(first));

  for (std::size_t i = 1; i < frames.size(); ++i) {
    RegistrationResult r = register_pair(out.registered[i - 1], out.registered[i], basis, cfg);
    out.registered[i] = apply_registration(out.registered[i], r, cfg.inner.interpolation);
    out.results.push_back(std::move(r));
  }
  return out;
}

double registration_error(const SphereDiffeo& estimate, const SphereDiffeo& truth) {
  require_same_grid(estimate.grid, truth.grid, "registration_error");
  const SphericalGrid& g = estimate.grid;
  const Field3 a = estimate.points();
  const Field3 b = truth.points();
  double num = 0.0, den = 0.0;
  for (int i = 0; i < g.nu(); ++i) {
    for (int j = 0; j < g.nv(); ++j) {
      const int k = g.index(i, j);
      const Eigen::Vector3d x = a.row(k).transpose(), y = b.row(k).transpose();
      num += g.weight(i) * std::atan2(x.cross(y).norm(), x.dot(y));
      den += g.weight(i);
    }
  }
  return num / den;
}

}  // namespace f4d
