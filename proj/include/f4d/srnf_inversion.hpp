#pragma once

#include "f4d/surface.hpp"

#include <optional>
#include <vector>

namespace f4d {

struct InversionConfig {
  /// Degree of the per-coordinate spherical-harmonic deformation basis.
  int l_max = 8;
  /// Initial line-search step.
  double step = 1.0;
  int max_iter = 3000;
  /// Stop once an accepted step lowers the energy by less than this fraction.
  double tol = 1e-12;
  /// Starting surface; when empty, a round sphere whose area matches |q|^2,
  /// rotated onto q by Procrustes.
  std::optional<Surface> init;
};

struct InversionResult {
  Surface surface;
  /// sqrt(E / |q|^2) with the pole-weighted energy E.
  double residual = 0.0;
  double initial_residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> energy_trace;
};

/// Finds f = init + sum_k c_k B_k minimizing |srnf_map(f) - q|^2, with B_k the
/// per-coordinate real spherical harmonics up to l_max. Descent is L-BFGS
/// with a backtracking line search on the analytic gradient; the result is
/// centred at the origin.
InversionResult invert_srnf(const Srnf& q, const InversionConfig& cfg = {});

/// Inverts frames in order, each warm-started from the previous solution.
/// A frame that throws is reported with converged=false and does not stop the
/// sequence.
std::vector<InversionResult> invert_trajectory(const std::vector<Srnf>& qs, const InversionConfig& cfg = {});

/// Energy weights of the inversion: 0.5 on the two rows nearest each pole.
Eigen::VectorXd inversion_weights(const SphericalGrid& grid);

}  // namespace f4d
