#pragma once

#include "f4d/srnf_inversion.hpp"
#include "f4d/spatial_registration.hpp"
#include "f4d/surface.hpp"

#include <utility>
#include <vector>

namespace f4d {

/// One flattened frame per row (3 * grid.size() values, row-major Field3).
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A path h : [0, 1] -> SRNF space sampled at increasing times.
struct Trajectory {
  SphericalGrid grid;
  std::vector<double> times;
  FrameMatrix frames;

  int size() const { return static_cast<int>(frames.rows()); }
  Srnf frame(int t) const;
  static Trajectory from_frames(const std::vector<Srnf>& frames, std::vector<double> times);
  static Trajectory from_surfaces(const std::vector<Surface>& frames, std::vector<double> times);
};

/// Transported square-root velocity field of a trajectory.
struct Tsrvf {
  SphericalGrid grid;
  std::vector<double> times;
  FrameMatrix values;

  int size() const { return static_cast<int>(values.rows()); }
  Field3 frame(int t) const;
};

/// Samples of a time warp xi on the uniform time grid; xi(0) = 0, xi(1) = 1.
struct TimeWarp {
  Eigen::VectorXd samples;

  int size() const { return static_cast<int>(samples.size()); }
  static TimeWarp identity(int n);
  /// Strictly increasing with exact endpoints.
  bool is_valid() const;
  /// Linear interpolation of xi at t.
  double operator()(double t) const;
};

/// Trapezoid quadrature weights of a time grid.
Eigen::VectorXd time_weights(const std::vector<double>& times);

/// Trajectory L2 inner product: time trapezoid of the spatial L2 product.
double tsrvf_inner(const Tsrvf& a, const Tsrvf& b);
double tsrvf_norm(const Tsrvf& a);
double tsrvf_distance(const Tsrvf& a, const Tsrvf& b);

/// q(t) = h'(t) / sqrt(|h'(t)|), h' by three-point differences. Parallel
/// transport is the identity in the flat SRNF space.
Tsrvf tsrvf_map(const Trajectory& h);

/// h(t) = h0 + int_0^t q |q| ds by the trapezoid rule.
Trajectory tsrvf_inverse(const Tsrvf& q, const Srnf& h0);

/// (q o xi) sqrt(xi'), linear in time. Throws NonMonotoneWarp for invalid xi.
Tsrvf warp_action(const Tsrvf& q, const TimeWarp& xi);

/// h o xi, linear in time.
Trajectory warp_trajectory(const Trajectory& h, const TimeWarp& xi);

/// (outer o inner)(t) sampled on the uniform grid of `inner`.
TimeWarp compose(const TimeWarp& outer, const TimeWarp& inner);
TimeWarp invert(const TimeWarp& xi);

/// Linear resampling onto n uniform times.
Trajectory resample(const Trajectory& h, int n);
Tsrvf resample(const Tsrvf& q, int n);

/// Step set of the alignment lattice: (di, dj) with 1 <= di, dj <= 3 and
/// gcd(di, dj) = 1.
const std::vector<std::pair<int, int>>& dp_steps();

/// Cost model of the alignment DP. Segment (k, l) -> (i, j) maps q1's time
/// interval [t_k, t_i] linearly onto q2's [t_l, t_j]; its cost is the
/// trapezoid integral over q1's samples of |q1(t) - sqrt(m) q2(xi(t))|^2
/// with slope m.
class DpCostModel {
 public:
  DpCostModel(const Tsrvf& q1, const Tsrvf& q2);
  double segment_cost(int k, int l, int i, int j) const;
  int size() const { return n_; }
  const Eigen::VectorXd& norms1() const { return norm1_; }
  const Eigen::MatrixXd& gram12() const { return g12_; }
  const Eigen::MatrixXd& gram22() const { return g22_; }

 private:
  int n_;
  std::vector<double> t_;
  Eigen::VectorXd norm1_;
  Eigen::MatrixXd g12_, g22_;
};

struct Alignment {
  TimeWarp warp;             // maps q1's time onto q2's
  double distance = 0.0;     // |q1 - warp_action(q2, warp)|
  double lattice_distance = 0.0;  // sqrt of the optimal lattice path cost
  double unaligned_distance = 0.0;
  bool refined = false;      // the smooth refinement beat the lattice warp
  std::vector<std::pair<int, int>> path;
};

/// The lattice only offers slopes a/b with a, b <= 3, so sqrt(xi') of a path
/// chatters between neighbouring slopes and leaves a floor on the distance.
/// The refinement starts from the lattice warp and runs damped Gauss-Newton
/// on the log slopes of its T - 1 intervals.
struct AlignOptions {
  bool refine = true;
  int max_iter = 30;
};

/// The smooth refinement alone, started from any valid warp.
TimeWarp refine_warp(const Tsrvf& q1, const Tsrvf& q2, const TimeWarp& start, const AlignOptions& options = {});

/// Minimizes |q1 - q2 (.) xi| over monotone lattice paths, then refines.
Alignment dp_align(const Tsrvf& q1, const Tsrvf& q2, const AlignOptions& options = {});

/// Straight line (1 - tau) q1 + tau q2 for tau_k = k / (n_steps - 1).
std::vector<Tsrvf> geodesic(const Tsrvf& q1, const Tsrvf& q2_aligned, int n_steps);

struct GeodesicConfig {
  RegistrationConfig registration;
  InversionConfig inversion;
  bool spatial = true;    // run sequential spatial registration first
  bool visualize = true;  // invert every geodesic frame to a surface
  int frames = 64;        // common resampling length; 0 keeps the input length
  int steps = 5;
};

struct GeodesicResult {
  Trajectory h1, h2, h2_aligned;
  Tsrvf q1, q2, q2_aligned;
  TimeWarp warp;
  double distance_before = 0.0;
  double distance_after = 0.0;
  std::vector<double> taus;
  std::vector<Tsrvf> tsrvf_path;
  std::vector<Trajectory> srnf_path;
  std::vector<std::vector<Surface>> surfaces;    // [tau][t]
  std::vector<std::vector<double>> residuals;    // [tau][t]
  bool inversion_converged = true;
};

/// Spatial registration of both sequences to a1's first frame, TSRVF mapping,
/// temporal alignment of a2 to a1, the straight-line geodesic, TSRVF inversion
/// and per-frame SRNF inversion.
GeodesicResult register_and_geodesic(const SurfaceSequence& a1, const SurfaceSequence& a2,
                                     const GeodesicConfig& cfg = {});

}  // namespace f4d
