#pragma once

#include "f4d/diffeo.hpp"
#include "f4d/spatial_registration.hpp"
#include "f4d/surface.hpp"
#include "f4d/temporal.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace f4d {

/// An analytic map (u, v) -> R^3 of the parameter sphere.
using ShapeFn = std::function<Eigen::Vector3d(double u, double v)>;

/// Samples `fn` on the grid.
Surface sample_shape(const SphericalGrid& grid, const ShapeFn& fn);
/// Samples `fn` at gamma(s): an exact f o gamma without interpolating f.
Surface sample_shape(const SphereDiffeo& gamma, const ShapeFn& fn);

ShapeFn ellipsoid_shape(double a, double b, double c);

/// Radial bumps r = 1 + amplitude * sum_lm a_lm Y_lm over degrees 2..l_max,
/// a_lm standard normal scaled so amplitude is the RMS radius change.
/// Axes are stretched by `axes` afterwards.
ShapeFn bumpy_shape(std::uint64_t seed, double amplitude, int l_max = 4,
                    const Eigen::Vector3d& axes = Eigen::Vector3d::Ones());

/// Elongated capsule along x whose outer part hinges about the z axis at
/// x = hinge by `angle` radians, blended over a short window. A second hinge
/// near the other end bends about y by `angle2`. The radius grows towards +x
/// so the two ends differ.
struct ArmShape {
  double length = 1.6;
  double radius = 0.35;
  double hinge = 0.3;
  double angle = 0.0;
  double hinge2 = -0.5;
  double angle2 = 0.0;
  double blend = 0.25;
};
ShapeFn arm_shape(const ArmShape& shape);

Surface unit_sphere(const SphericalGrid& grid);
Surface ellipsoid(const SphericalGrid& grid, double a, double b, double c);
Surface bumpy_surface(const SphericalGrid& grid, std::uint64_t seed, double amplitude, int l_max = 4,
                      const Eigen::Vector3d& axes = Eigen::Vector3d::Ones());
Surface arm_surface(const SphericalGrid& grid, const ArmShape& shape);

/// Derives the seed of trial i from a master seed.
std::uint64_t trial_seed(std::uint64_t master, std::uint64_t i);

/// gamma = d o d o d o d o d with d = normalize(s + (magnitude / 5) sum_i c_i b_i)
/// and c_i standard normal; draws that fold the sphere are redrawn. Throws
/// MagnitudeTooLarge after 100 rejected draws. coeffs = magnitude * c.
SphereDiffeo random_sphere_diffeo(const TangentBasis& basis, std::uint64_t seed, double magnitude);
SphereDiffeo random_sphere_diffeo(const SphericalGrid& grid, std::uint64_t seed, double magnitude, int l_max = 6);

/// Normalized cumulative integral of exp(magnitude g), g a random Fourier
/// series of `modes` sine/cosine pairs.
TimeWarp random_time_warp(int n, std::uint64_t seed, double magnitude, int modes = 3);

/// Frames (1 - t) f0 + t f1 at n uniform times. The SRNF path is still
/// curved and its speed varies, since the SRNF map is nonlinear.
SurfaceSequence interpolate_surfaces(const Surface& f0, const Surface& f1, int n);

/// Resamples a sequence of surfaces onto h(xi(t)) frames.
SurfaceSequence warp_sequence(const SurfaceSequence& s, const TimeWarp& xi);

}  // namespace f4d
