#pragma once

#include "f4d/srnf_inversion.hpp"
#include "f4d/temporal.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace f4d {

struct KarcherConfig {
  int max_iter = 20;
  /// Stop when |(|mean_new| - |mean_old|)| / |mean_old| falls below this.
  double tol = 1e-6;
  /// Start from input 0, or from a seed-chosen input when set.
  std::optional<std::uint64_t> random_init_seed;
  AlignOptions align;
};

struct MeanResult {
  Tsrvf mean_tsrvf;
  std::vector<TimeWarp> warps;       // input i aligned is q_i (.) warps[i]
  std::vector<Tsrvf> aligned_tsrvfs;
  /// sum_i |mean - q_i (.) xi_i|^2; entry 0 is the initialization.
  std::vector<double> cost_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<Surface> mean_4d;  // filled by visualize_mean
};

/// Alternates aligning every input to the current mean and averaging. An
/// input keeps its previous alignment when the new one is not closer, so
/// the cost never increases.
MeanResult karcher_mean(const std::vector<Tsrvf>& qs, const KarcherConfig& cfg = {});

/// Integrates the mean from `start` and inverts every frame into mean_4d.
void visualize_mean(MeanResult& mean, const Srnf& start, const InversionConfig& cfg = {});

struct PcaModel {
  Tsrvf mean;
  Eigen::VectorXd eigenvalues;     // descending
  std::vector<Tsrvf> eigenvectors;  // orthonormal under tsrvf_inner
  int k = 0;
  int sample_size = 0;
  bool rank_deficient = false;     // fewer than the requested components
};

/// PCA of trajectories already aligned to `mean`, via the n x n Gram matrix
/// of the metric-weighted deviations.
PcaModel pca(const std::vector<Tsrvf>& aligned, const Tsrvf& mean, int k);
PcaModel pca(const MeanResult& mean, int k);

/// mean + tau sqrt(sigma_i) e_i for each tau.
std::vector<Tsrvf> principal_path(const PcaModel& model, int i, const std::vector<double>& taus);

/// Coordinates <q - mean, e_i> / sqrt(sigma_i) and the reconstruction from
/// the first `k` of them (k < 0 uses all).
Eigen::VectorXd project(const PcaModel& model, const Tsrvf& q);
Tsrvf reconstruct(const PcaModel& model, const Eigen::VectorXd& coeffs, int k = -1);

/// Standard normal coefficients clamped to [-clamp, clamp].
Eigen::VectorXd sample_coefficients(const PcaModel& model, std::uint64_t seed, double clamp = 1.5);
Tsrvf sample_random(const PcaModel& model, std::uint64_t seed, double clamp = 1.5);

enum class Representation { Surface, Srnf, Curve, Tsrvf };

struct CvConfig {
  int folds = 5;
  int k = 3;
  std::uint64_t seed = 0;
  /// tsrvf space: align held-out items to the training mean before projecting.
  bool align_test = true;
  KarcherConfig karcher;
};

struct CvResult {
  double mean = 0.0, std = 0.0, median = 0.0;  // over all held-out items
  std::vector<double> fold_means;
  std::vector<double> errors;      // per item, in dataset order
  std::vector<int> fold_of;        // fold index of every item
};

/// Fold assignment: a seeded permutation dealt round-robin into folds.
std::vector<int> cv_folds(int n, int folds, std::uint64_t seed);

/// Cross-validated PCA reconstruction error. Surfaces take Surface (raw
/// coordinates, sphere-area L2) or Srnf (SRNF L2); trajectories take Curve
/// (SRNF trajectory L2) or Tsrvf (aligned TSRVF L2).
CvResult expressiveness_cv(const std::vector<Surface>& items, Representation mode, const CvConfig& cfg = {});
CvResult expressiveness_cv(const std::vector<Trajectory>& items, Representation mode, const CvConfig& cfg = {});

}  // namespace f4d
