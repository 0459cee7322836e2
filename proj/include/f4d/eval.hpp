#pragma once

#include "f4d/spatial_registration.hpp"
#include "f4d/statistics.hpp"
#include "f4d/temporal.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace f4d {

struct SummaryStats {
  double mean = 0.0, std = 0.0, median = 0.0;  // population std
};

SummaryStats summarize(const std::vector<double>& values);

/// Result of one evaluation protocol. The JSON form holds everything except
/// the timings, so it is byte-identical across runs and thread counts.
struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config;
  std::vector<nlohmann::ordered_json> items;
  /// Column name -> stats over the numeric column of `items`.
  std::map<std::string, SummaryStats> summary;
  nlohmann::ordered_json metrics;  // protocol-level figures and pass/fail checks
  std::map<std::string, double> timings;  // seconds

  /// Recomputes `summary` from the listed numeric columns of `items`.
  void summarize_columns(const std::vector<std::string>& columns);
  std::vector<double> column(const std::string& name) const;
  std::string to_json() const;
  std::string timings_json() const;
};

struct SpatialEvalConfig {
  std::uint64_t seed = 0;
  int trials = 20;
  int nu = 64, nv = 64;
  double magnitude = 0.05;
  RegistrationConfig registration;
};

/// Synthetic shapes (bumpy triaxial, bent arm, bumpy round in turn) sampled
/// exactly at a random diffeo gamma0, registered back; the error is the
/// geodesic distance on S^2 to invert(gamma0).
ExperimentReport eval_spatial(const SpatialEvalConfig& cfg = {});

struct TemporalEvalConfig {
  std::uint64_t seed = 0;
  int trials = 20;
  int nu = 32, nv = 32;
  int frames = 64;
  double warp_magnitude = 0.5;
  /// Axis change between the two deformations of a cross pair.
  double perturbation = 0.1;
  AlignOptions align;
};

/// Per trial, two pairs built from a linear interpolation alpha between two
/// random bumpy surfaces: a self pair (alpha, alpha o xi0) and a cross pair
/// (alpha, beta o xi0) with beta a slightly different deformation. The
/// cross pair's baseline is the unwarped distance |Phi(alpha) - Phi(beta)|.
ExperimentReport eval_temporal(const TemporalEvalConfig& cfg = {});

struct PcaEvalConfig {
  std::uint64_t seed = 0;
  int items = 25;
  int folds = 5;
  int k = 2;
  int nu = 32, nv = 32;
  int frames = 32;
  double warp_magnitude = 0.8;
  KarcherConfig karcher;
};

/// Cross-validated PCA reconstruction on a bending family (slender two-hinge
/// arms, surface vs srnf space) and a rate-varied family (warped linear
/// interpolations, curve vs tsrvf space).
ExperimentReport eval_pca(const PcaEvalConfig& cfg = {});

}  // namespace f4d
