#include "f4d/error.hpp"
#include "f4d/io.hpp"
#include "f4d/synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace f4d;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("f4d_io_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

// Flips each header byte in turn and demands that the reader throws.
void fuzz_header(const fs::path& p, int header_bytes, const std::function<void(const fs::path&)>& read) {
  const std::vector<char> good = slurp(p);
  REQUIRE(static_cast<int>(good.size()) > header_bytes);
  const fs::path bad = p.string() + ".fuzz";
  for (int b = 0; b < header_bytes; ++b) {
    for (unsigned char mask : {0x01, 0x80, 0xff}) {
      std::vector<char> bytes = good;
      bytes[b] = static_cast<char>(bytes[b] ^ mask);
      spit(bad, bytes);
      CHECK_THROWS_AS(read(bad), Error);
    }
  }
}

PcaModel small_model() {
  const SphericalGrid g = make_grid(6, 8);
  std::vector<Tsrvf> qs;
  for (int i = 0; i < 4; ++i) {
    const SurfaceSequence s = interpolate_surfaces(unit_sphere(g), ellipsoid(g, 1.0 + 0.1 * i, 1.0, 0.9 - 0.05 * i), 5);
    qs.push_back(tsrvf_map(Trajectory::from_surfaces(s.frames, s.times)));
  }
  Tsrvf mean = qs[0];
  for (int i = 1; i < 4; ++i) mean.values += qs[i].values;
  mean.values /= 4.0;
  return pca(qs, mean, 2);
}

}  // namespace

TEST_CASE("grid field round trip and header fuzz") {
  const fs::path p = scratch("a.f4dg");
  const Surface f = bumpy_surface(make_grid(10, 14), 3, 0.3);
  write_surface(p, f);
  CHECK(fs::file_size(p) == 20 + 10 * 14 * 3 * 8);
  const Surface back = read_surface(p);
  CHECK(back.grid == f.grid);
  CHECK(back.values == f.values);
  fuzz_header(p, 20, [](const fs::path& q) { read_surface(q); });

  std::vector<char> bytes = slurp(p);
  bytes.pop_back();
  spit(p, bytes);
  CHECK(code_of([&] { read_surface(p); }) == ErrorCode::TruncatedFile);
  bytes[0] = 'X';
  spit(p, bytes);
  try {
    read_surface(p);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadMagic);
    CHECK(std::string(e.what()).find("a.f4dg") != std::string::npos);
  }
  CHECK(code_of([&] { read_surface(p.parent_path() / "nope.f4dg"); }) == ErrorCode::Io);
}

TEST_CASE("diffeo round trip, fuzz and invariant") {
  const fs::path p = scratch("d.f4dd");
  SphereDiffeo d = random_sphere_diffeo(make_grid(12, 12), 5, 0.05);
  write_diffeo(p, d);
  const SphereDiffeo back = read_diffeo(p);
  CHECK(back.target_u == d.target_u);
  CHECK(back.target_v == d.target_v);
  CHECK(back.coeffs == d.coeffs);
  CHECK(back.is_valid());
  fuzz_header(p, 24, [](const fs::path& q) { read_diffeo(q); });

  d.jac_det[7] = -0.1;
  CHECK(code_of([&] { write_diffeo(p, d); }) == ErrorCode::InvalidDiffeo);
}

TEST_CASE("warp round trip and fuzz") {
  const fs::path p = scratch("w.f4dw");
  const TimeWarp id = TimeWarp::identity(17);
  write_warp(p, id);
  CHECK(read_warp(p).samples == id.samples);
  const TimeWarp xi = random_time_warp(33, 4, 0.7);
  write_warp(p, xi);
  CHECK(read_warp(p).samples == xi.samples);
  fuzz_header(p, 16, [](const fs::path& q) { read_warp(q); });
  TimeWarp bad = xi;
  bad.samples[3] = bad.samples[2];
  CHECK(code_of([&] { write_warp(p, bad); }) == ErrorCode::NonMonotoneWarp);
}

TEST_CASE("model round trip and fuzz") {
  const fs::path p = scratch("m.f4dm");
  const PcaModel m = small_model();
  write_model(p, m);
  const PcaModel back = read_model(p);
  CHECK(back.k == m.k);
  CHECK(back.sample_size == m.sample_size);
  CHECK(back.mean.times == m.mean.times);
  CHECK(back.mean.values == m.mean.values);
  CHECK(back.eigenvalues == m.eigenvalues);
  for (int i = 0; i < m.k; ++i) CHECK(back.eigenvectors[i].values == m.eigenvectors[i].values);
  fuzz_header(p, 32, [](const fs::path& q) { read_model(q); });
}

TEST_CASE("a model with no components samples its mean") {
  const fs::path p = scratch("m0.f4dm");
  PcaModel m = small_model();
  m.k = 0;
  m.eigenvalues.resize(0);
  m.eigenvectors.clear();
  write_model(p, m);
  const PcaModel back = read_model(p);
  CHECK(back.k == 0);
  CHECK(sample_random(back, 3).values == m.mean.values);
}

TEST_CASE("sequence round trip and manifest checks") {
  const fs::path dir = scratch("seq");
  const SphericalGrid g = make_grid(8, 10);
  const SurfaceSequence s = interpolate_surfaces(unit_sphere(g), ellipsoid(g, 1.2, 1.0, 0.8), 3);
  write_sequence(dir, s, "test");
  const SurfaceSequence back = read_sequence(dir);
  REQUIRE(back.size() == 3);
  CHECK(back.times == s.times);
  for (int t = 0; t < 3; ++t) CHECK(back.frames[t].values == s.frames[t].values);

  // Rewriting what was read gives identical bytes.
  const fs::path dir2 = scratch("seq2");
  write_sequence(dir2, back, "test");
  CHECK(slurp(dir / "manifest.json") == slurp(dir2 / "manifest.json"));
  CHECK(slurp(dir / "frame_0001.f4dg") == slurp(dir2 / "frame_0001.f4dg"));

  SequenceManifest m = read_manifest(dir);
  CHECK(m.frames == 3);
  CHECK(m.nu == 8);
  CHECK(m.notes == "test");

  fs::remove(dir / "frame_0002.f4dg");
  CHECK(code_of([&] { read_sequence(dir); }) == ErrorCode::TruncatedFile);

  m.files.pop_back();
  write_manifest(dir, m);
  CHECK(code_of([&] { read_sequence(dir); }) == ErrorCode::TruncatedFile);

  write_sequence(dir, s);
  write_surface(dir / "frame_0001.f4dg", unit_sphere(make_grid(8, 12)));
  CHECK(code_of([&] { read_sequence(dir); }) == ErrorCode::GridMismatch);

  write_sequence(dir, s);
  nlohmann::json j = nlohmann::json::parse(std::ifstream(dir / "manifest.json"));
  j["schema_version"] = 2;
  std::ofstream(dir / "manifest.json") << j.dump();
  CHECK(code_of([&] { read_sequence(dir); }) == ErrorCode::VersionMismatch);
}

TEST_CASE("SRNF sequence round trip") {
  const fs::path dir = scratch("srnf");
  const SphericalGrid g = make_grid(6, 6);
  std::vector<Srnf> qs{srnf_map(unit_sphere(g)), srnf_map(ellipsoid(g, 1.1, 1, 1))};
  write_srnf_sequence(dir, qs, {0.0, 1.0});
  std::vector<double> times;
  const std::vector<Srnf> back = read_srnf_sequence(dir, &times);
  CHECK(times == std::vector<double>{0.0, 1.0});
  CHECK(back[1].values == qs[1].values);
  CHECK_THROWS_AS(read_sequence(dir), Error);
}

TEST_CASE("mesh export and import") {
  const fs::path p = scratch("s.obj");
  const Surface f = ellipsoid(make_grid(16, 16), 1.2, 1.0, 0.7);
  export_mesh(p, f);
  std::ifstream in(p);
  int verts = 0, faces = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("v ", 0) == 0) ++verts;
    if (line.rfind("f ", 0) == 0) ++faces;
  }
  CHECK(verts == 16 * 16 + 2);
  // Two fans of nv triangles plus two triangles per quad between rows.
  CHECK(faces == 2 * 16 + 2 * 15 * 16);
  const Surface back = import_grid_mesh(p, 16, 16);
  CHECK((back.values - f.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(code_of([&] { import_grid_mesh(p, 16, 15); }) == ErrorCode::NotAGridMesh);

  std::ofstream(p) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
  CHECK(code_of([&] { import_grid_mesh(p, 16, 16); }) == ErrorCode::NotAGridMesh);
}

TEST_CASE("geodesic export naming") {
  const fs::path dir = scratch("geo");
  const Surface f = unit_sphere(make_grid(6, 6));
  export_geodesic(dir, {{f, f}, {f, f}, {f, f}});
  CHECK(fs::exists(dir / "geod_0_0.obj"));
  CHECK(fs::exists(dir / "geod_2_1.obj"));
  CHECK_FALSE(fs::exists(dir / "geod_3_0.obj"));
}
