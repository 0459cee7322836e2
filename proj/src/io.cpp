#include "f4d/io.hpp"

#include "f4d/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <array>
#include <cmath>

namespace f4d {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &value, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&value, b, sizeof(T));
  }
  return value;
}

std::uint32_t fnv1a(const std::string& bytes) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

class Writer {
 public:
  explicit Writer(const char* magic) { buf_.append(magic, 4); }
  void u32(std::uint32_t v) { put(to_little(v)); }
  void f64(double v) { put(to_little(v)); }
  void f64s(const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f64(p[i]);
  }
  void checksum() { u32(fnv1a(buf_)); }
  void save(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
  }

 private:
  template <class T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  std::string buf_;
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class Reader {
 public:
  Reader(const fs::path& path, const char* magic) : path_(path), buf_(slurp(path)) {
    if (buf_.size() < 4 || buf_.compare(0, 4, magic, 4) != 0) {
      throw Error(ErrorCode::BadMagic, path_.string() + ": expected " + std::string(magic, 4));
    }
    pos_ = 4;
  }
  std::uint32_t u32() { return to_little(get<std::uint32_t>()); }
  double f64() { return to_little(get<double>()); }
  void f64s(double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = f64();
  }
  void version() {
    const std::uint32_t v = u32();
    if (v != kSchemaVersion) {
      throw Error(ErrorCode::VersionMismatch, path_.string() + ": schema version " + std::to_string(v));
    }
  }
  void checksum() {
    const std::uint32_t expected = fnv1a(buf_.substr(0, pos_));
    if (u32() != expected) throw Error(ErrorCode::BadMagic, path_.string() + ": header checksum mismatch");
  }
  // Payload of `doubles` f64 values must fill the rest of the file exactly.
  void expect_payload(std::uint64_t doubles) {
    const std::uint64_t want = pos_ + 8 * doubles;
    if (buf_.size() != want) {
      throw Error(ErrorCode::TruncatedFile, path_.string() + ": size " + std::to_string(buf_.size()) +
                                                ", header implies " + std::to_string(want));
    }
  }
  const fs::path& path() const { return path_; }

 private:
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > buf_.size()) throw Error(ErrorCode::TruncatedFile, path_.string() + ": header cut short");
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  fs::path path_;
  std::string buf_;
  std::size_t pos_ = 0;
};

SphericalGrid grid_from_header(const Reader& r, std::uint32_t nu, std::uint32_t nv) {
  if (nu < 4 || nv < 4 || nu > (1u << 16) || nv > (1u << 16)) {
    throw Error(ErrorCode::ResolutionTooSmall, r.path().string() + ": implausible grid " + std::to_string(nu) + "x" +
                                                   std::to_string(nv));
  }
  return make_grid(static_cast<int>(nu), static_cast<int>(nv));
}

constexpr std::uint32_t kMaxCount = 1u << 28;

}  // namespace

void write_grid_field(const fs::path& path, const Field3& values, const SphericalGrid& grid) {
  if (values.rows() != grid.size()) throw Error(ErrorCode::GridMismatch, "field does not match its grid");
  Writer w("F4DG");
  w.u32(kSchemaVersion);
  w.u32(static_cast<std::uint32_t>(grid.nu()));
  w.u32(static_cast<std::uint32_t>(grid.nv()));
  w.u32(3);
  w.f64s(values.data(), static_cast<std::size_t>(values.size()));
  w.save(path);
}

Field3 read_grid_field(const fs::path& path, SphericalGrid* grid) {
  Reader r(path, "F4DG");
  r.version();
  const std::uint32_t nu = r.u32(), nv = r.u32(), channels = r.u32();
  if (channels != 3) throw Error(ErrorCode::BadMagic, path.string() + ": expected 3 channels");
  const SphericalGrid g = grid_from_header(r, nu, nv);
  r.expect_payload(3ull * nu * nv);
  Field3 values(g.size(), 3);
  r.f64s(values.data(), static_cast<std::size_t>(values.size()));
  if (grid) *grid = g;
  return values;
}

void write_surface(const fs::path& path, const Surface& f) { write_grid_field(path, f.values, f.grid); }

Surface read_surface(const fs::path& path) {
  Surface f;
  f.values = read_grid_field(path, &f.grid);
  return f;
}

void write_diffeo(const fs::path& path, const SphereDiffeo& gamma) {
  if (!gamma.is_valid()) throw Error(ErrorCode::InvalidDiffeo, "refusing to write a diffeo with jac_det <= 0");
  Writer w("F4DD");
  w.u32(kSchemaVersion);
  w.u32(static_cast<std::uint32_t>(gamma.grid.nu()));
  w.u32(static_cast<std::uint32_t>(gamma.grid.nv()));
  w.u32(static_cast<std::uint32_t>(gamma.coeffs.size()));
  w.checksum();
  w.f64s(gamma.target_u.data(), static_cast<std::size_t>(gamma.target_u.size()));
  w.f64s(gamma.target_v.data(), static_cast<std::size_t>(gamma.target_v.size()));
  w.f64s(gamma.coeffs.data(), static_cast<std::size_t>(gamma.coeffs.size()));
  w.save(path);
}

SphereDiffeo read_diffeo(const fs::path& path) {
  Reader r(path, "F4DD");
  r.version();
  const std::uint32_t nu = r.u32(), nv = r.u32(), nc = r.u32();
  r.checksum();
  const SphericalGrid g = grid_from_header(r, nu, nv);
  if (nc > kMaxCount) throw Error(ErrorCode::TruncatedFile, path.string() + ": implausible coefficient count");
  r.expect_payload(2ull * nu * nv + nc);
  Eigen::VectorXd tu(g.size()), tv(g.size()), c(nc);
  r.f64s(tu.data(), tu.size());
  r.f64s(tv.data(), tv.size());
  r.f64s(c.data(), c.size());
  SphereDiffeo d = SphereDiffeo::from_angles(g, std::move(tu), std::move(tv));
  d.coeffs = std::move(c);
  if (!d.is_valid()) throw Error(ErrorCode::InvalidDiffeo, path.string() + ": diffeo folds the sphere");
  return d;
}

void write_warp(const fs::path& path, const TimeWarp& xi) {
  if (!xi.is_valid()) throw Error(ErrorCode::NonMonotoneWarp, "refusing to write an invalid warp");
  Writer w("F4DW");
  w.u32(kSchemaVersion);
  w.u32(static_cast<std::uint32_t>(xi.size()));
  w.checksum();
  w.f64s(xi.samples.data(), static_cast<std::size_t>(xi.size()));
  w.save(path);
}

TimeWarp read_warp(const fs::path& path) {
  Reader r(path, "F4DW");
  r.version();
  const std::uint32_t n = r.u32();
  r.checksum();
  if (n < 2 || n > kMaxCount) throw Error(ErrorCode::TruncatedFile, path.string() + ": implausible sample count");
  r.expect_payload(n);
  TimeWarp xi{Eigen::VectorXd(n)};
  r.f64s(xi.samples.data(), n);
  if (!xi.is_valid()) throw Error(ErrorCode::NonMonotoneWarp, path.string() + ": warp is not increasing");
  return xi;
}

void write_model(const fs::path& path, const PcaModel& m) {
  const SphericalGrid& g = m.mean.grid;
  const int t = m.mean.size();
  Writer w("F4DM");
  w.u32(kSchemaVersion);
  w.u32(static_cast<std::uint32_t>(g.nu()));
  w.u32(static_cast<std::uint32_t>(g.nv()));
  w.u32(static_cast<std::uint32_t>(t));
  w.u32(static_cast<std::uint32_t>(m.k));
  w.u32(static_cast<std::uint32_t>(m.sample_size));
  w.checksum();
  w.f64s(m.mean.times.data(), m.mean.times.size());
  w.f64s(m.mean.values.data(), static_cast<std::size_t>(m.mean.values.size()));
  w.f64s(m.eigenvalues.data(), static_cast<std::size_t>(m.k));
  for (int i = 0; i < m.k; ++i) w.f64s(m.eigenvectors[i].values.data(), static_cast<std::size_t>(m.eigenvectors[i].values.size()));
  const Eigen::VectorXd tw = time_weights(m.mean.times);
  for (int k = 0; k < t; ++k) {
    const double root = std::sqrt(tw[k] * g.chart_weight());
    for (int c = 0; c < 3 * g.size(); ++c) w.f64(root);
  }
  w.save(path);
}

PcaModel read_model(const fs::path& path) {
  Reader r(path, "F4DM");
  r.version();
  const std::uint32_t nu = r.u32(), nv = r.u32(), t = r.u32(), k = r.u32(), n = r.u32();
  r.checksum();
  const SphericalGrid g = grid_from_header(r, nu, nv);
  if (t < 2 || t > kMaxCount || k > kMaxCount || n > kMaxCount || (n > 0 && k > n - 1)) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": implausible model header");
  }
  const std::uint64_t frame = 3ull * nu * nv;
  r.expect_payload(t + frame * t + k + k * frame * t + frame * t);

  PcaModel m;
  m.k = static_cast<int>(k);
  m.sample_size = static_cast<int>(n);
  m.mean.grid = g;
  m.mean.times.resize(t);
  r.f64s(m.mean.times.data(), t);
  m.mean.values.resize(t, static_cast<Eigen::Index>(frame));
  r.f64s(m.mean.values.data(), static_cast<std::size_t>(m.mean.values.size()));
  m.eigenvalues.resize(k);
  r.f64s(m.eigenvalues.data(), k);
  for (std::uint32_t i = 0; i < k; ++i) {
    Tsrvf e{g, m.mean.times, FrameMatrix(t, static_cast<Eigen::Index>(frame))};
    r.f64s(e.values.data(), static_cast<std::size_t>(e.values.size()));
    m.eigenvectors.push_back(std::move(e));
  }
  // The weights are recomputable from the grid and times; they are stored for
  // readers that do not know the quadrature, and checked here.
  const Eigen::VectorXd tw = time_weights(m.mean.times);
  for (std::uint32_t s = 0; s < t; ++s) {
    const double root = std::sqrt(tw[s] * g.chart_weight());
    for (std::uint64_t c = 0; c < frame; ++c) {
      if (r.f64() != root) throw Error(ErrorCode::InvalidArgument, path.string() + ": flattening weights disagree");
    }
  }
  return m;
}

SequenceManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
  SequenceManifest m;
  try {
    m.schema_version = j.at("schema_version").get<std::uint32_t>();
    if (m.schema_version != kSchemaVersion) {
      throw Error(ErrorCode::VersionMismatch, path.string() + ": schema version " + std::to_string(m.schema_version));
    }
    m.nu = j.at("grid").at("nu").get<int>();
    m.nv = j.at("grid").at("nv").get<int>();
    m.frames = j.at("frames").get<int>();
    m.times = j.at("times").get<std::vector<double>>();
    m.files = j.at("files").get<std::vector<std::string>>();
    m.kind = j.value("kind", std::string("surface"));
    m.notes = j.value("notes", std::string());
    if (j.contains("ground_truth")) {
      const auto& gt = j.at("ground_truth");
      if (gt.contains("warp")) m.warp_ref = gt.at("warp").get<std::string>();
      if (gt.contains("diffeo")) m.diffeo_ref = gt.at("diffeo").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Io, path.string() + ": " + e.what());
  }
  if (m.frames < 2) throw Error(ErrorCode::Degenerate, path.string() + ": fewer than two frames");
  if (static_cast<int>(m.files.size()) != m.frames || static_cast<int>(m.times.size()) != m.frames) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": frame count " + std::to_string(m.frames) +
                                              " but " + std::to_string(m.files.size()) + " files and " +
                                              std::to_string(m.times.size()) + " times");
  }
  for (int k = 0; k < m.frames; ++k) {
    const bool in_range = m.times[k] >= 0.0 && m.times[k] <= 1.0;
    if (!in_range || (k > 0 && !(m.times[k] > m.times[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": times must increase within [0, 1]");
    }
  }
  if (m.kind != "surface" && m.kind != "srnf") throw Error(ErrorCode::InvalidArgument, path.string() + ": unknown kind");
  return m;
}

void write_manifest(const fs::path& dir, const SequenceManifest& m) {
  nlohmann::json j;
  j["schema_version"] = m.schema_version;
  j["grid"] = {{"nu", m.nu}, {"nv", m.nv}};
  j["frames"] = m.frames;
  j["times"] = m.times;
  j["files"] = m.files;
  j["kind"] = m.kind;
  j["notes"] = m.notes;
  if (m.warp_ref || m.diffeo_ref) {
    nlohmann::json gt = nlohmann::json::object();
    if (m.warp_ref) gt["warp"] = *m.warp_ref;
    if (m.diffeo_ref) gt["diffeo"] = *m.diffeo_ref;
    j["ground_truth"] = gt;
  }
  fs::create_directories(dir);
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << '\n';
}

namespace {

std::string frame_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.f4dg", k);
  return buf;
}

void write_frames(const fs::path& dir, const std::vector<const Field3*>& fields, const SphericalGrid& grid,
                  const std::vector<double>& times, const std::string& kind, const std::string& notes) {
  if (fields.size() != times.size()) throw Error(ErrorCode::InvalidArgument, "write_sequence: times do not match frames");
  fs::create_directories(dir);
  SequenceManifest m;
  m.nu = grid.nu();
  m.nv = grid.nv();
  m.frames = static_cast<int>(fields.size());
  m.times = times;
  m.kind = kind;
  m.notes = notes;
  for (int k = 0; k < m.frames; ++k) {
    m.files.push_back(frame_name(k));
    write_grid_field(dir / m.files.back(), *fields[k], grid);
  }
  write_manifest(dir, m);
}

std::vector<Field3> read_frames(const fs::path& dir, const SequenceManifest& m, SphericalGrid& grid) {
  std::vector<Field3> out;
  for (const std::string& name : m.files) {
    if (!fs::exists(dir / name)) throw Error(ErrorCode::TruncatedFile, (dir / name).string() + ": missing frame file");
    SphericalGrid g;
    out.push_back(read_grid_field(dir / name, &g));
    if (g.nu() != m.nu || g.nv() != m.nv) {
      throw Error(ErrorCode::GridMismatch, (dir / name).string() + ": grid differs from the manifest");
    }
    grid = g;
  }
  return out;
}

}  // namespace

void write_sequence(const fs::path& dir, const SurfaceSequence& seq, const std::string& notes) {
  std::vector<const Field3*> fields;
  for (const Surface& f : seq.frames) {
    require_same_grid(seq.grid(), f.grid, "write_sequence");
    fields.push_back(&f.values);
  }
  write_frames(dir, fields, seq.grid(), seq.times, "surface", notes);
}

SurfaceSequence read_sequence(const fs::path& dir) {
  const SequenceManifest m = read_manifest(dir);
  if (m.kind != "surface") throw Error(ErrorCode::InvalidArgument, dir.string() + ": not a surface sequence");
  SphericalGrid g;
  SurfaceSequence seq;
  seq.times = m.times;
  for (Field3& v : read_frames(dir, m, g)) seq.frames.push_back({g, std::move(v)});
  return seq;
}

void write_srnf_sequence(const fs::path& dir, const std::vector<Srnf>& frames, const std::vector<double>& times,
                         const std::string& notes) {
  if (frames.empty()) throw Error(ErrorCode::Degenerate, "write_srnf_sequence: no frames");
  std::vector<const Field3*> fields;
  for (const Srnf& q : frames) {
    require_same_grid(frames.front().grid, q.grid, "write_srnf_sequence");
    fields.push_back(&q.values);
  }
  write_frames(dir, fields, frames.front().grid, times, "srnf", notes);
}

std::vector<Srnf> read_srnf_sequence(const fs::path& dir, std::vector<double>* times) {
  const SequenceManifest m = read_manifest(dir);
  if (m.kind != "srnf") throw Error(ErrorCode::InvalidArgument, dir.string() + ": not an SRNF sequence");
  SphericalGrid g;
  std::vector<Srnf> out;
  for (Field3& v : read_frames(dir, m, g)) out.push_back({g, std::move(v)});
  if (times) *times = m.times;
  return out;
}

void export_mesh(const fs::path& path, const Surface& f) {
  const SphericalGrid& g = f.grid;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  char line[128];
  auto vertex = [&](const Eigen::RowVector3d& p) {
    std::snprintf(line, sizeof line, "v %.17g %.17g %.17g\n", p[0], p[1], p[2]);
    out << line;
  };
  for (int k = 0; k < g.size(); ++k) vertex(f.values.row(k));
  const int nu = g.nu(), nv = g.nv();
  vertex(f.values.topRows(nv).colwise().mean());
  vertex(f.values.bottomRows(nv).colwise().mean());
  const int north = g.size() + 1, south = g.size() + 2;  // OBJ is 1-based
  auto id = [&](int i, int j) { return g.index(i, (j + nv) % nv) + 1; };
  for (int j = 0; j < nv; ++j) out << "f " << north << ' ' << id(0, j) << ' ' << id(0, j + 1) << '\n';
  for (int i = 0; i + 1 < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      out << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
      out << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
    }
  }
  for (int j = 0; j < nv; ++j) out << "f " << id(nu - 1, j) << ' ' << south << ' ' << id(nu - 1, j + 1) << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

Surface import_grid_mesh(const fs::path& path, int nu, int nv) {
  const SphericalGrid g = make_grid(nu, nv);
  std::istringstream in(slurp(path));
  std::vector<Eigen::RowVector3d> verts;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      Eigen::RowVector3d p;
      if (!(ls >> p[0] >> p[1] >> p[2])) throw Error(ErrorCode::NotAGridMesh, path.string() + ": bad vertex line");
      verts.push_back(p);
    } else if (tag == "f") {
      std::array<int, 3> f{};
      std::string extra;
      if (!(ls >> f[0] >> f[1] >> f[2]) || (ls >> extra)) {
        throw Error(ErrorCode::NotAGridMesh, path.string() + ": faces must be plain triangles");
      }
      faces.push_back(f);
    } else if (!tag.empty() && tag[0] != '#') {
      throw Error(ErrorCode::NotAGridMesh, path.string() + ": unexpected record '" + tag + "'");
    }
  }
  if (static_cast<int>(verts.size()) != g.size() + 2) {
    throw Error(ErrorCode::NotAGridMesh, path.string() + ": vertex count does not match a " + std::to_string(nu) + "x" +
                                             std::to_string(nv) + " grid");
  }
  // The connectivity has to be exactly export_mesh's.
  const int north = g.size() + 1, south = g.size() + 2;
  auto id = [&](int i, int j) { return g.index(i, (j + nv) % nv) + 1; };
  std::vector<std::array<int, 3>> expected;
  for (int j = 0; j < nv; ++j) expected.push_back({north, id(0, j), id(0, j + 1)});
  for (int i = 0; i + 1 < nu; ++i) {
    for (int j = 0; j < nv; ++j) {
      expected.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      expected.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  for (int j = 0; j < nv; ++j) expected.push_back({id(nu - 1, j), south, id(nu - 1, j + 1)});
  if (faces != expected) throw Error(ErrorCode::NotAGridMesh, path.string() + ": connectivity is not a grid tessellation");

  Surface f{g, Field3(g.size(), 3)};
  for (int k = 0; k < g.size(); ++k) f.values.row(k) = verts[k];
  return f;
}

void export_geodesic(const fs::path& dir, const std::vector<std::vector<Surface>>& surfaces) {
  fs::create_directories(dir);
  for (std::size_t tau = 0; tau < surfaces.size(); ++tau) {
    for (std::size_t t = 0; t < surfaces[tau].size(); ++t) {
      export_mesh(dir / ("geod_" + std::to_string(tau) + "_" + std::to_string(t) + ".obj"), surfaces[tau][t]);
    }
  }
}

}  // namespace f4d
