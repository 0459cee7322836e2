#pragma once

#include "f4d/diffeo.hpp"
#include "f4d/statistics.hpp"
#include "f4d/surface.hpp"
#include "f4d/temporal.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace f4d {

inline constexpr std::uint32_t kSchemaVersion = 1;

// Binary containers, all little-endian:
//   F4DG  "F4DG" u32 version, u32 nu, u32 nv, u32 channels=3, then nu*nv*3 f64
//         (row k = i * nv + j, xyz interleaved).
//   F4DD  "F4DD" u32 version, u32 nu, u32 nv, u32 ncoeffs, u32 check,
//         then target_u[nu*nv], target_v[nu*nv], coeffs[ncoeffs] as f64.
//   F4DW  "F4DW" u32 version, u32 n, u32 check, then n f64 samples.
//   F4DM  "F4DM" u32 version, u32 nu, u32 nv, u32 T, u32 k, u32 n, u32 check,
//         then times[T], mean[T*nu*nv*3], eigenvalues[k],
//         eigenvectors[k*T*nu*nv*3], flattening weights[T*nu*nv*3].
// `check` is FNV-1a over the header bytes before it. Readers demand the exact
// file size.

void write_grid_field(const std::filesystem::path& path, const Field3& values, const SphericalGrid& grid);
Field3 read_grid_field(const std::filesystem::path& path, SphericalGrid* grid = nullptr);

void write_surface(const std::filesystem::path& path, const Surface& f);
Surface read_surface(const std::filesystem::path& path);

/// Refuses a diffeo with any jac_det <= 0 (InvalidDiffeo); so does the reader.
void write_diffeo(const std::filesystem::path& path, const SphereDiffeo& gamma);
SphereDiffeo read_diffeo(const std::filesystem::path& path);

void write_warp(const std::filesystem::path& path, const TimeWarp& xi);
TimeWarp read_warp(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const PcaModel& model);
PcaModel read_model(const std::filesystem::path& path);

/// Contents of manifest.json in a sequence directory.
struct SequenceManifest {
  std::uint32_t schema_version = kSchemaVersion;
  int nu = 0, nv = 0;
  int frames = 0;
  std::vector<double> times;
  std::vector<std::string> files;
  std::string kind = "surface";  // or "srnf"
  std::string notes;
  std::optional<std::string> warp_ref;
  std::optional<std::string> diffeo_ref;
};

SequenceManifest read_manifest(const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& dir, const SequenceManifest& m);

/// Directory with manifest.json and frame_0000.f4dg, ...
void write_sequence(const std::filesystem::path& dir, const SurfaceSequence& seq, const std::string& notes = "");
SurfaceSequence read_sequence(const std::filesystem::path& dir);

void write_srnf_sequence(const std::filesystem::path& dir, const std::vector<Srnf>& frames,
                         const std::vector<double>& times, const std::string& notes = "");
std::vector<Srnf> read_srnf_sequence(const std::filesystem::path& dir, std::vector<double>* times = nullptr);

/// Triangulated OBJ: the nu * nv grid vertices in row order, then a north and
/// a south pole vertex (means of the first and last rows) fanned to their
/// rings. v is periodic, so there is no seam column to weld.
void export_mesh(const std::filesystem::path& path, const Surface& f);
/// Reads a mesh written by export_mesh; anything else is NotAGridMesh.
Surface import_grid_mesh(const std::filesystem::path& path, int nu, int nv);

/// geod_{tau index}_{t index}.obj for every surface of a geodesic.
void export_geodesic(const std::filesystem::path& dir, const std::vector<std::vector<Surface>>& surfaces);

}  // namespace f4d
