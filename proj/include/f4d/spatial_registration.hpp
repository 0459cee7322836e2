#pragma once

#include "f4d/diffeo.hpp"
#include "f4d/rotation.hpp"
#include "f4d/surface.hpp"

#include <vector>

namespace f4d {

/// Orthonormal tangent fields on S^2 spanning reparameterization updates.
/// Elements are ambient 3-vectors tangent to the sphere, orthonormal under
/// the round-sphere quadrature.
struct TangentBasis {
  SphericalGrid grid;
  std::vector<Field3> elements;
  int l_max = 0;

  int size() const { return static_cast<int>(elements.size()); }
  /// sum_i c_i b_i
  Field3 combine(const Eigen::VectorXd& coeffs) const;
};

/// Gradients of the real spherical harmonics of degree 1..l_max,
/// orthonormalized by modified Gram-Schmidt; zero-norm candidates are dropped.
TangentBasis make_tangent_basis(const SphericalGrid& grid, int l_max);

struct RotationFit {
  Rotation3 rotation;
  /// The cross-covariance had a repeated or vanishing singular value, so the
  /// optimum is not unique.
  bool rank_deficient = false;
};

/// Procrustes: the R in SO(3) minimizing |q1 - R q2|.
RotationFit optimal_rotation(const Srnf& q1, const Srnf& q2);

enum class DescentDirection {
  /// d gamma = sum_i <q1 - q2~, dphi(b_i)> b_i.
  Gradient,
  /// The same gradient preconditioned by the Gram matrix of the dphi(b_i).
  GaussNewton,
};

struct DiffeoSearch {
  SphereDiffeo diffeo;
  std::vector<double> energy_trace;  // initial energy, then every accepted iterate
  bool converged = false;
  int iterations = 0;
};

struct DiffeoSearchOptions {
  double step = 0.1;
  int max_iter = 100;
  double tol = 1e-6;
  double fd_delta = 1e-4;
  DescentDirection direction = DescentDirection::GaussNewton;
  /// Interpolation inside the SRNF action of the energy.
  Interpolation interpolation = Interpolation::Bicubic;
};

/// Gradient descent on E(gamma) = |q1 - q2 * gamma|^2 over reparameterizations
/// generated by `basis`, starting at `initial` (identity when empty). Steps
/// that raise the energy or fold the map are rejected and the step halves.
DiffeoSearch register_diffeo(const Srnf& q1, const Srnf& q2, const TangentBasis& basis,
                             const DiffeoSearchOptions& options, const SphereDiffeo* initial = nullptr);

struct RegistrationConfig {
  int l_max = 6;
  int outer_iters = 10;
  double tol = 1e-6;
  DiffeoSearchOptions inner;
};

struct RegistrationResult {
  Rotation3 rotation;
  SphereDiffeo diffeo;
  std::vector<double> energy_trace;
  bool converged = false;
};

/// Solves min over (R, gamma) of |q1 - R (q2 * gamma)| by alternating
/// Procrustes and diffeo descent, rotation first.
RegistrationResult register_pair(const Surface& f1, const Surface& f2, const RegistrationConfig& cfg = {});
RegistrationResult register_pair(const Surface& f1, const Surface& f2, const TangentBasis& basis,
                                 const RegistrationConfig& cfg);

/// R (f o gamma)
Surface apply_registration(const Surface& f, const RegistrationResult& r,
                           Interpolation kind = Interpolation::Bilinear);

struct TrajectoryRegistration {
  std::vector<RegistrationResult> results;  // one per frame
  std::vector<Surface> registered;
};

/// Registers frame 0 to `reference` and applies that to all frames, then
/// registers every frame to its already registered predecessor.
TrajectoryRegistration register_trajectory(const std::vector<Surface>& frames, const Surface& reference,
                                           const RegistrationConfig& cfg = {});

/// Area-weighted mean great-circle distance between gamma_est(s) and gamma_gt(s).
double registration_error(const SphereDiffeo& estimate, const SphereDiffeo& truth);

}  // namespace f4d
