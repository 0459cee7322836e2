// Command-line front end. Machine output goes to files only; messages go to
// stderr. Exit codes: 0 ok, 1 usage, 2 data error, 3 non-convergence (the
// results are still written).

#include "f4d/error.hpp"
#include "f4d/eval.hpp"
#include "f4d/io.hpp"
#include "f4d/parallel.hpp"
#include "f4d/spatial_registration.hpp"
#include "f4d/srnf_inversion.hpp"
#include "f4d/statistics.hpp"
#include "f4d/synthetic.hpp"
#include "f4d/temporal.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace f4d;

namespace {

constexpr int kOk = 0, kUsage = 1, kDataError = 2, kNotConverged = 3;

struct Globals {
  std::string config;
  std::string grid = "64x64";
  int frames = 64;
  int lmax = 6;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<int> threads;  // F4D_THREADS when unset
  bool grid_set = false, frames_set = false;  // by a flag or the config file
};

std::pair<int, int> parse_grid(const std::string& s) {
  int nu = 0, nv = 0;
  char x = 0;
  std::istringstream in(s);
  if (!(in >> nu >> x >> nv) || (x != 'x' && x != 'X') || !in.eof()) {
    throw CLI::ValidationError("--grid", "expected NUxNV, got '" + s + "'");
  }
  return {nu, nv};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::vector<double> parse_taus(const std::string& s) {
  // start:step:stop, or a comma list.
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    double a = 0, h = 0, b = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> a >> c1 >> h >> c2 >> b) || c1 != ':' || c2 != ':' || !(h > 0.0) || b < a) {
      throw CLI::ValidationError("--taus", "expected start:step:stop");
    }
    const int n = static_cast<int>(std::floor((b - a) / h + 1e-9)) + 1;
    for (int k = 0; k < n; ++k) out.push_back(a + k * h);
  } else {
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stod(tok));
  }
  if (out.empty()) throw CLI::ValidationError("--taus", "no values");
  return out;
}

std::vector<Surface> normalized_frames(const SurfaceSequence& s) {
  std::vector<Surface> out;
  for (const Surface& f : s.frames) out.push_back(preshape_normalize(f));
  return out;
}

Tsrvf sequence_tsrvf(const SurfaceSequence& s, int frames) {
  Trajectory h = Trajectory::from_surfaces(normalized_frames(s), s.times);
  if (frames > 0) h = resample(h, frames);
  return tsrvf_map(h);
}

Json trace_json(const std::vector<double>& v) { return Json(v); }

// Writes a trajectory of SRNFs, and optionally its surfaces and OBJ meshes.
bool write_path(const fs::path& dir, const Trajectory& h, bool surfaces, const InversionConfig& inv) {
  std::vector<Srnf> frames;
  for (int t = 0; t < h.size(); ++t) frames.push_back(h.frame(t));
  write_srnf_sequence(dir / "srnf", frames, h.times);
  if (!surfaces) return true;
  bool ok = true;
  SurfaceSequence seq;
  seq.times = h.times;
  for (InversionResult& r : invert_trajectory(frames, inv)) {
    ok = ok && r.converged;
    seq.frames.push_back(std::move(r.surface));
  }
  write_sequence(dir / "surfaces", seq);
  for (int t = 0; t < seq.size(); ++t) export_mesh(dir / ("frame_" + std::to_string(t) + ".obj"), seq.frames[t]);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"4D surface registration, geodesics and statistics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Key/value JSON file with defaults for the global flags");
  auto* grid_opt = app.add_option("--grid", g.grid, "Grid NUxNV for synthetic data and evaluation");
  auto* frames_opt = app.add_option("--frames", g.frames, "Common trajectory length T")->check(CLI::PositiveNumber);
  auto* lmax_opt = app.add_option("--lmax", g.lmax, "Harmonic degree of the registration basis")->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--tol", g.tol, "Stopping tolerance of the main iteration");
  auto* iter_opt = app.add_option("--max-iter", g.max_iter, "Iteration cap of the main iteration");
  auto* threads_opt = app.add_option("--threads", g.threads, "Worker threads (default F4D_THREADS, else 1)")->check(CLI::PositiveNumber);

  std::string a, b, out_path, model_path, protocol;
  std::vector<std::string> seqs;
  int steps = 5, k = 3, index = 0;
  std::uint64_t seed = 0;
  double clamp = 1.5;
  std::string taus = "-1.5:0.5:1.5";
  bool no_spatial = false, no_visualize = false, surfaces = false, do_register = false;
  int trials = 0;

  auto* reg_s = app.add_subcommand("register-spatial", "Register sequence b onto the first frame of a");
  reg_s->add_option("a", a, "Reference sequence directory")->required();
  reg_s->add_option("b", b, "Sequence to register")->required();
  reg_s->add_option("-o,--out", out_path, "Output directory")->required();

  auto* reg_t = app.add_subcommand("register-temporal", "Align the rate of sequence b to a");
  reg_t->add_option("a", a)->required();
  reg_t->add_option("b", b)->required();
  reg_t->add_option("-o,--out", out_path)->required();

  auto* geo = app.add_subcommand("geodesic", "Registration, alignment and geodesic between two sequences");
  geo->add_option("a", a)->required();
  geo->add_option("b", b)->required();
  geo->add_option("--steps", steps, "Geodesic samples in tau")->check(CLI::Range(2, 1000));
  geo->add_option("-o,--out", out_path)->required();
  geo->add_flag("--no-spatial", no_spatial, "Skip spatial registration");
  geo->add_flag("--no-visualize", no_visualize, "Skip SRNF inversion and OBJ export");

  auto* mean = app.add_subcommand("mean", "Karcher mean of sequences");
  mean->add_option("seqs", seqs, "Sequence directories")->required()->expected(2, -1);
  mean->add_option("-o,--out", out_path)->required();
  mean->add_flag("--register", do_register, "Spatially register every sequence to the first one's first frame");
  mean->add_flag("--surfaces", surfaces, "Invert the mean into surfaces");

  auto* pca_cmd = app.add_subcommand("pca", "PCA model of sequences");
  pca_cmd->add_option("seqs", seqs)->required()->expected(2, -1);
  pca_cmd->add_option("-k", k, "Retained components")->check(CLI::PositiveNumber);
  pca_cmd->add_option("-o,--out", out_path, "Model file")->required();
  pca_cmd->add_flag("--register", do_register, "Spatially register every sequence first");

  auto* modes = app.add_subcommand("modes", "Paths along a principal direction");
  modes->add_option("model", model_path)->required();
  modes->add_option("-i", index, "Component index")->check(CLI::NonNegativeNumber);
  modes->add_option("--taus", taus, "start:step:stop or a comma list");
  modes->add_option("-o,--out", out_path)->required();
  modes->add_flag("--surfaces", surfaces, "Invert every frame into surfaces and OBJ meshes");

  auto* sample = app.add_subcommand("sample", "Random trajectory from a model");
  sample->add_option("model", model_path)->required();
  sample->add_option("--seed", seed);
  sample->add_option("--clamp", clamp)->check(CLI::NonNegativeNumber);
  sample->add_option("-o,--out", out_path)->required();
  sample->add_flag("--surfaces", surfaces, "Invert every frame into surfaces and OBJ meshes");

  auto* inv = app.add_subcommand("invert", "Invert an SRNF sequence into surfaces");
  inv->add_option("seq", a)->required();
  inv->add_option("-o,--out", out_path)->required();

  auto* ev = app.add_subcommand("eval", "Run an evaluation protocol: spatial, temporal or pca");
  ev->add_option("protocol", protocol)->required()->check(CLI::IsMember({"spatial", "temporal", "pca"}));
  ev->add_option("--seed", seed);
  ev->add_option("--trials", trials, "Trial or item count (0 keeps the protocol default)")->check(CLI::NonNegativeNumber);
  ev->add_option("-o,--out", out_path, "report.json path")->required();

  try {
    app.parse(argc, argv);
    g.grid_set = grid_opt->count() > 0;
    g.frames_set = frames_opt->count() > 0;
    if (!g.config.empty()) {
      nlohmann::json c;
      try {
        std::ifstream in(g.config);
        if (!in) throw CLI::ValidationError("--config", "cannot open " + g.config);
        c = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw CLI::ValidationError("--config", e.what());
      }
      // Flags win over the file.
      if (c.contains("grid") && !grid_opt->count()) {
        g.grid = c["grid"].get<std::string>();
        g.grid_set = true;
      }
      if (c.contains("frames") && !frames_opt->count()) {
        g.frames = c["frames"].get<int>();
        g.frames_set = true;
      }
      if (c.contains("lmax") && !lmax_opt->count()) g.lmax = c["lmax"].get<int>();
      if (c.contains("tol") && !tol_opt->count()) g.tol = c["tol"].get<double>();
      if (c.contains("max_iter") && !iter_opt->count()) g.max_iter = c["max_iter"].get<int>();
      if (c.contains("threads") && !threads_opt->count()) g.threads = c["threads"].get<int>();
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config: " << e.what() << '\n';
    return kUsage;
  }

  int nu = 0, nv = 0;
  try {
    std::tie(nu, nv) = parse_grid(g.grid);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help();
    return kUsage;
  }
  if (g.threads) set_thread_count(*g.threads);

  RegistrationConfig reg;
  reg.l_max = g.lmax;
  if (g.tol) reg.tol = *g.tol;
  if (g.max_iter) reg.outer_iters = *g.max_iter;
  InversionConfig inv_cfg;
  KarcherConfig karcher;
  if (g.tol) karcher.tol = *g.tol;
  if (g.max_iter) karcher.max_iter = *g.max_iter;

  try {
    const fs::path out(out_path);
    if (*reg_s) {
      const SurfaceSequence sa = read_sequence(a), sb = read_sequence(b);
      const TrajectoryRegistration r = register_trajectory(normalized_frames(sb), preshape_normalize(sa.frames.front()), reg);
      bool ok = true;
      Json results = Json::array();
      for (const RegistrationResult& x : r.results) {
        ok = ok && x.converged;
        const Eigen::Matrix3d m = x.rotation.matrix();
        results.push_back(Json{{"rotation", {m(0, 0), m(0, 1), m(0, 2), m(1, 0), m(1, 1), m(1, 2), m(2, 0), m(2, 1), m(2, 2)}},
                               {"energy_trace", trace_json(x.energy_trace)},
                               {"converged", x.converged}});
      }
      SurfaceSequence registered{r.registered, sb.times};
      write_sequence(out / "registered", registered, "registered onto the first frame of " + a);
      for (std::size_t i = 0; i < r.results.size(); ++i) {
        write_diffeo(out / ("diffeo_" + std::to_string(i) + ".f4dd"), r.results[i].diffeo);
      }
      write_text(out / "result.json", Json{{"frames", results}}.dump(2) + "\n");
      return ok ? kOk : kNotConverged;
    }

    if (*reg_t) {
      const SurfaceSequence sa = read_sequence(a), sb = read_sequence(b);
      const Tsrvf q1 = sequence_tsrvf(sa, g.frames), q2 = sequence_tsrvf(sb, g.frames);
      const Alignment al = dp_align(q1, q2);
      write_warp(out / "warp.f4dw", al.warp);
      // b's surfaces on the common uniform grid (linear in time), then warped.
      const std::vector<Surface> nb = normalized_frames(sb);
      SurfaceSequence resampled;
      resampled.times = uniform_times(g.frames);
      for (double t : resampled.times) {
        auto it = std::upper_bound(sb.times.begin(), sb.times.end(), t);
        const int j = std::clamp(static_cast<int>(it - sb.times.begin()) - 1, 0, sb.size() - 2);
        const double lam = std::clamp((t - sb.times[j]) / (sb.times[j + 1] - sb.times[j]), 0.0, 1.0);
        resampled.frames.push_back({nb[j].grid, (1.0 - lam) * nb[j].values + lam * nb[j + 1].values});
      }
      write_sequence(out / "aligned", warp_sequence(resampled, al.warp), "time-aligned to " + a);
      write_text(out / "result.json", Json{{"distance_before", al.unaligned_distance},
                                           {"distance_after", al.distance},
                                           {"lattice_distance", al.lattice_distance},
                                           {"refined", al.refined}}
                                              .dump(2) + "\n");
      return kOk;
    }

    if (*geo) {
      GeodesicConfig cfg;
      cfg.registration = reg;
      cfg.inversion = inv_cfg;
      cfg.spatial = !no_spatial;
      cfg.visualize = !no_visualize;
      cfg.frames = g.frames;
      cfg.steps = steps;
      const GeodesicResult r = register_and_geodesic(read_sequence(a), read_sequence(b), cfg);
      fs::create_directories(out);
      write_warp(out / "warp.f4dw", r.warp);
      for (std::size_t s = 0; s < r.srnf_path.size(); ++s) {
        std::vector<Srnf> frames;
        for (int t = 0; t < r.srnf_path[s].size(); ++t) frames.push_back(r.srnf_path[s].frame(t));
        write_srnf_sequence(out / ("srnf_" + std::to_string(s)), frames, r.srnf_path[s].times);
      }
      if (cfg.visualize) export_geodesic(out, r.surfaces);
      write_text(out / "result.json", Json{{"distance_before", r.distance_before},
                                           {"distance_after", r.distance_after},
                                           {"taus", r.taus},
                                           {"residuals", r.residuals},
                                           {"inversion_converged", r.inversion_converged}}
                                              .dump(2) + "\n");
      return r.inversion_converged ? kOk : kNotConverged;
    }

    if (*mean || *pca_cmd) {
      std::vector<SurfaceSequence> inputs;
      for (const std::string& s : seqs) inputs.push_back(read_sequence(s));
      std::vector<Tsrvf> qs;
      std::vector<Srnf> starts;
      const Surface reference = preshape_normalize(inputs.front().frames.front());
      for (const SurfaceSequence& s : inputs) {
        std::vector<Surface> frames = normalized_frames(s);
        if (do_register) frames = register_trajectory(frames, reference, reg).registered;
        Trajectory h = resample(Trajectory::from_surfaces(frames, s.times), g.frames);
        starts.push_back(h.frame(0));
        qs.push_back(tsrvf_map(h));
      }
      MeanResult m = karcher_mean(qs, karcher);
      if (*pca_cmd) {
        const PcaModel model = pca(m, std::min<int>(k, static_cast<int>(qs.size()) - 1));
        write_model(out, model);
        if (model.rank_deficient) std::cerr << "pca: sample supports only " << model.k << " components\n";
        return m.converged ? kOk : kNotConverged;
      }
      Srnf start = starts.front();
      start.values.setZero();
      for (const Srnf& s : starts) start.values += s.values / static_cast<double>(starts.size());
      for (std::size_t i = 0; i < m.warps.size(); ++i) write_warp(out / ("warp_" + std::to_string(i) + ".f4dw"), m.warps[i]);
      const bool inv_ok = write_path(out / "mean", tsrvf_inverse(m.mean_tsrvf, start), surfaces, inv_cfg);
      write_text(out / "result.json", Json{{"cost_trace", trace_json(m.cost_trace)},
                                           {"iterations", m.iterations},
                                           {"converged", m.converged}}
                                              .dump(2) + "\n");
      return m.converged && inv_ok ? kOk : kNotConverged;
    }

    if (*modes || *sample) {
      const PcaModel model = read_model(model_path);
      const SphericalGrid grid = model.mean.grid;
      const Srnf start = srnf_map(preshape_normalize(unit_sphere(grid)));
      bool ok = true;
      if (*modes) {
        const std::vector<double> ts = parse_taus(taus);
        const std::vector<Tsrvf> path = principal_path(model, index, ts);
        for (std::size_t s = 0; s < path.size(); ++s) {
          ok = write_path(out / ("tau_" + std::to_string(s)), tsrvf_inverse(path[s], start), surfaces, inv_cfg) && ok;
        }
        write_text(out / "result.json", Json{{"component", index}, {"taus", ts}}.dump(2) + "\n");
      } else {
        const Eigen::VectorXd c = sample_coefficients(model, seed, clamp);
        ok = write_path(out, tsrvf_inverse(reconstruct(model, c), start), surfaces, inv_cfg);
        write_text(out / "result.json",
                   Json{{"seed", seed}, {"clamp", clamp}, {"coefficients", std::vector<double>(c.data(), c.data() + c.size())}}
                           .dump(2) + "\n");
      }
      return ok ? kOk : kNotConverged;
    }

    if (*inv) {
      std::vector<double> times;
      const std::vector<Srnf> qs = read_srnf_sequence(a, &times);
      InversionConfig cfg = inv_cfg;
      if (g.tol) cfg.tol = *g.tol;
      if (g.max_iter) cfg.max_iter = *g.max_iter;
      SurfaceSequence seq;
      seq.times = times;
      Json residuals = Json::array();
      bool ok = true;
      for (InversionResult& r : invert_trajectory(qs, cfg)) {
        ok = ok && r.converged;
        residuals.push_back(Json{{"residual", r.residual}, {"converged", r.converged}, {"iterations", r.iterations}});
        seq.frames.push_back(std::move(r.surface));
      }
      write_sequence(out / "surfaces", seq, "inverted from " + a);
      write_text(out / "result.json", Json{{"frames", residuals}}.dump(2) + "\n");
      return ok ? kOk : kNotConverged;
    }

    if (*ev) {
      ExperimentReport rep;
      if (protocol == "spatial") {
        SpatialEvalConfig c;
        c.seed = seed;
        c.nu = nu;
        c.nv = nv;
        c.registration = reg;
        if (trials > 0) c.trials = trials;
        rep = eval_spatial(c);
      } else if (protocol == "temporal") {
        TemporalEvalConfig c;
        c.seed = seed;
        if (g.grid_set) {
          c.nu = nu;
          c.nv = nv;
        }
        c.frames = g.frames;
        if (trials > 0) c.trials = trials;
        rep = eval_temporal(c);
      } else {
        PcaEvalConfig c;
        c.seed = seed;
        c.karcher = karcher;
        if (g.grid_set) {
          c.nu = nu;
          c.nv = nv;
        }
        if (g.frames_set) c.frames = g.frames;
        if (trials > 0) c.items = trials;
        rep = eval_pca(c);
      }
      write_text(out, rep.to_json());
      fs::path timings = out;
      timings.replace_extension(".timings.json");
      write_text(timings, rep.timings_json());
      std::cerr << protocol << ": " << rep.metrics.dump() << '\n';
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
