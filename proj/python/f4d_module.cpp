// Python bindings. Surfaces and SRNFs travel as (nu, nv, 3) float64 arrays,
// trajectories and TSRVFs as (T, nu, nv, 3) arrays plus a list of times.

#include "f4d/error.hpp"
#include "f4d/eval.hpp"
#include "f4d/io.hpp"
#include "f4d/parallel.hpp"
#include "f4d/spatial_registration.hpp"
#include "f4d/srnf_inversion.hpp"
#include "f4d/statistics.hpp"
#include "f4d/synthetic.hpp"
#include "f4d/temporal.hpp"

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

namespace py = pybind11;
using namespace f4d;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field3 to_field(const Array& a, SphericalGrid* grid) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw Error(ErrorCode::InvalidArgument, "expected an (nu, nv, 3) array");
  *grid = make_grid(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  Field3 f(grid->size(), 3);
  std::memcpy(f.data(), a.data(), sizeof(double) * f.size());
  return f;
}

Array from_field(const Field3& f, const SphericalGrid& g) {
  Array a({g.nu(), g.nv(), 3});
  std::memcpy(a.mutable_data(), f.data(), sizeof(double) * f.size());
  return a;
}

Surface to_surface(const Array& a) {
  Surface s;
  s.values = to_field(a, &s.grid);
  return s;
}

Srnf to_srnf(const Array& a) {
  Srnf q;
  q.values = to_field(a, &q.grid);
  return q;
}

Array from_surface(const Surface& s) { return from_field(s.values, s.grid); }
Array from_srnf(const Srnf& q) { return from_field(q.values, q.grid); }

FrameMatrix to_frames(const Array& a, SphericalGrid* grid) {
  if (a.ndim() != 4 || a.shape(3) != 3) throw Error(ErrorCode::InvalidArgument, "expected a (T, nu, nv, 3) array");
  *grid = make_grid(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  FrameMatrix m(a.shape(0), 3 * grid->size());
  std::memcpy(m.data(), a.data(), sizeof(double) * m.size());
  return m;
}

Array from_frames(const FrameMatrix& m, const SphericalGrid& g) {
  Array a({static_cast<int>(m.rows()), g.nu(), g.nv(), 3});
  std::memcpy(a.mutable_data(), m.data(), sizeof(double) * m.size());
  return a;
}

std::vector<double> times_or_uniform(const std::optional<std::vector<double>>& times, int n) {
  return times ? *times : uniform_times(n);
}

Tsrvf to_tsrvf(const Array& a, const std::optional<std::vector<double>>& times) {
  Tsrvf q;
  q.values = to_frames(a, &q.grid);
  q.times = times_or_uniform(times, q.size());
  if (static_cast<int>(q.times.size()) != q.size()) throw Error(ErrorCode::InvalidArgument, "times and frames differ in length");
  return q;
}

Trajectory to_trajectory(const Array& a, const std::optional<std::vector<double>>& times) {
  Trajectory h;
  h.frames = to_frames(a, &h.grid);
  h.times = times_or_uniform(times, h.size());
  if (static_cast<int>(h.times.size()) != h.size()) throw Error(ErrorCode::InvalidArgument, "times and frames differ in length");
  return h;
}

std::vector<Surface> to_surfaces(const Array& a) {
  SphericalGrid g;
  const FrameMatrix m = to_frames(a, &g);
  std::vector<Surface> out;
  for (int t = 0; t < m.rows(); ++t) {
    Surface s{g, Field3(g.size(), 3)};
    std::memcpy(s.values.data(), m.row(t).data(), sizeof(double) * s.values.size());
    out.push_back(std::move(s));
  }
  return out;
}

Array from_surfaces(const std::vector<Surface>& fs) {
  if (fs.empty()) return Array(std::vector<py::ssize_t>{0, 0, 0, 3});
  const SphericalGrid& g = fs.front().grid;
  Array a({static_cast<int>(fs.size()), g.nu(), g.nv(), 3});
  for (std::size_t t = 0; t < fs.size(); ++t) {
    std::memcpy(a.mutable_data() + t * 3 * g.size(), fs[t].values.data(), sizeof(double) * 3 * g.size());
  }
  return a;
}

py::dict registration_dict(const RegistrationResult& r, const Surface& f2) {
  py::dict d;
  d["rotation"] = Eigen::Matrix3d(r.rotation.matrix());
  d["energy_trace"] = r.energy_trace;
  d["converged"] = r.converged;
  d["registered"] = from_surface(apply_registration(f2, r));
  d["target_u"] = Eigen::VectorXd(r.diffeo.target_u);
  d["target_v"] = Eigen::VectorXd(r.diffeo.target_v);
  return d;
}

py::dict pca_dict(const PcaModel& m) {
  py::dict d;
  d["mean"] = from_frames(m.mean.values, m.mean.grid);
  d["times"] = m.mean.times;
  d["eigenvalues"] = m.eigenvalues;
  d["k"] = m.k;
  d["sample_size"] = m.sample_size;
  d["rank_deficient"] = m.rank_deficient;
  return d;
}

py::object parse_json(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

}  // namespace

PYBIND11_MODULE(_f4d, m) {
  m.doc() = "Elastic registration and statistics of 4D surfaces";

  // The message starts with the error code name, e.g. "GridMismatch: ...".
  py::register_exception<Error>(m, "F4dError", PyExc_RuntimeError);

  m.def("set_threads", &set_thread_count, py::arg("n"));
  m.def("threads", &thread_count);

  // Shapes
  m.def("unit_sphere", [](int nu, int nv) { return from_surface(unit_sphere(make_grid(nu, nv))); },
        py::arg("nu"), py::arg("nv"));
  m.def("ellipsoid", [](int nu, int nv, double a, double b, double c) {
        return from_surface(ellipsoid(make_grid(nu, nv), a, b, c));
      }, py::arg("nu"), py::arg("nv"), py::arg("a"), py::arg("b"), py::arg("c"));
  m.def("bumpy_surface", [](int nu, int nv, std::uint64_t seed, double amplitude, int l_max) {
        return from_surface(bumpy_surface(make_grid(nu, nv), seed, amplitude, l_max));
      }, py::arg("nu"), py::arg("nv"), py::arg("seed"), py::arg("amplitude") = 0.2, py::arg("l_max") = 4);
  m.def("arm_surface", [](int nu, int nv, double length, double radius, double hinge, double angle,
                          double hinge2, double angle2, double blend) {
        return from_surface(arm_surface(make_grid(nu, nv), ArmShape{length, radius, hinge, angle, hinge2, angle2, blend}));
      }, py::arg("nu"), py::arg("nv"), py::arg("length") = 1.6, py::arg("radius") = 0.35, py::arg("hinge") = 0.3,
      py::arg("angle") = 0.0, py::arg("hinge2") = -0.5, py::arg("angle2") = 0.0, py::arg("blend") = 0.25);
  m.def("interpolate_surfaces", [](const Array& f0, const Array& f1, int n) {
        return from_surfaces(interpolate_surfaces(to_surface(f0), to_surface(f1), n).frames);
      }, py::arg("f0"), py::arg("f1"), py::arg("n"));
  m.def("random_time_warp", [](int n, std::uint64_t seed, double magnitude) {
        return Eigen::VectorXd(random_time_warp(n, seed, magnitude).samples);
      }, py::arg("n"), py::arg("seed"), py::arg("magnitude") = 0.5);

  // Geometry
  m.def("srnf", [](const Array& f) { return from_srnf(srnf_map(to_surface(f))); }, py::arg("surface"));
  m.def("preshape", [](const Array& f) { return from_surface(preshape_normalize(to_surface(f))); }, py::arg("surface"));
  m.def("surface_area", [](const Array& f) { return surface_area(to_surface(f)); }, py::arg("surface"));
  m.def("srnf_distance", [](const Array& a, const Array& b) {
        const Srnf qa = to_srnf(a), qb = to_srnf(b);
        require_same_grid(qa.grid, qb.grid, "srnf_distance");
        return l2_distance(qa.grid, qa.values, qb.values);
      }, py::arg("q1"), py::arg("q2"));

  // Spatial registration
  m.def("register_pair", [](const Array& f1, const Array& f2, int l_max, int outer_iters, double tol) {
        RegistrationConfig cfg;
        cfg.l_max = l_max;
        cfg.outer_iters = outer_iters;
        cfg.tol = tol;
        const Surface s1 = to_surface(f1), s2 = to_surface(f2);
        RegistrationResult r;
        {
          py::gil_scoped_release release;
          r = register_pair(s1, s2, cfg);
        }
        return registration_dict(r, s2);
      }, py::arg("f1"), py::arg("f2"), py::arg("l_max") = 6, py::arg("outer_iters") = 10, py::arg("tol") = 1e-6);
  m.def("optimal_rotation", [](const Array& q1, const Array& q2) {
        return Eigen::Matrix3d(optimal_rotation(to_srnf(q1), to_srnf(q2)).rotation.matrix());
      }, py::arg("q1"), py::arg("q2"));

  // SRNF inversion
  m.def("invert_srnf", [](const Array& q, int l_max, int max_iter, double tol) {
        InversionConfig cfg;
        cfg.l_max = l_max;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        const Srnf target = to_srnf(q);
        InversionResult r;
        {
          py::gil_scoped_release release;
          r = invert_srnf(target, cfg);
        }
        py::dict d;
        d["surface"] = from_surface(r.surface);
        d["residual"] = r.residual;
        d["initial_residual"] = r.initial_residual;
        d["converged"] = r.converged;
        d["iterations"] = r.iterations;
        return d;
      }, py::arg("q"), py::arg("l_max") = 8, py::arg("max_iter") = 3000, py::arg("tol") = 1e-12);

  // Temporal
  m.def("srnf_trajectory", [](const Array& surfaces, std::optional<std::vector<double>> times) {
        const std::vector<Surface> fs = to_surfaces(surfaces);
        const Trajectory h = Trajectory::from_surfaces(fs, times_or_uniform(times, static_cast<int>(fs.size())));
        return from_frames(h.frames, h.grid);
      }, py::arg("surfaces"), py::arg("times") = py::none());
  m.def("tsrvf", [](const Array& h, std::optional<std::vector<double>> times) {
        const Tsrvf q = tsrvf_map(to_trajectory(h, times));
        return from_frames(q.values, q.grid);
      }, py::arg("srnf_frames"), py::arg("times") = py::none());
  m.def("tsrvf_inverse", [](const Array& q, const Array& h0, std::optional<std::vector<double>> times) {
        const Trajectory h = tsrvf_inverse(to_tsrvf(q, times), to_srnf(h0));
        return from_frames(h.frames, h.grid);
      }, py::arg("q"), py::arg("h0"), py::arg("times") = py::none());
  m.def("tsrvf_distance", [](const Array& a, const Array& b, std::optional<std::vector<double>> times) {
        return tsrvf_distance(to_tsrvf(a, times), to_tsrvf(b, times));
      }, py::arg("q1"), py::arg("q2"), py::arg("times") = py::none());
  m.def("warp_action", [](const Array& q, const Eigen::VectorXd& warp) {
        const Tsrvf out = warp_action(to_tsrvf(q, std::nullopt), TimeWarp{warp});
        return from_frames(out.values, out.grid);
      }, py::arg("q"), py::arg("warp"));
  m.def("dp_align", [](const Array& q1, const Array& q2, bool refine) {
        const Tsrvf a = to_tsrvf(q1, std::nullopt), b = to_tsrvf(q2, std::nullopt);
        Alignment al;
        {
          py::gil_scoped_release release;
          al = dp_align(a, b, AlignOptions{refine});
        }
        py::dict d;
        d["warp"] = Eigen::VectorXd(al.warp.samples);
        d["distance"] = al.distance;
        d["lattice_distance"] = al.lattice_distance;
        d["unaligned_distance"] = al.unaligned_distance;
        d["refined"] = al.refined;
        return d;
      }, py::arg("q1"), py::arg("q2"), py::arg("refine") = true);
  m.def("geodesic", [](const Array& q1, const Array& q2_aligned, int steps) {
        std::vector<Array> out;
        for (const Tsrvf& q : geodesic(to_tsrvf(q1, std::nullopt), to_tsrvf(q2_aligned, std::nullopt), steps)) {
          out.push_back(from_frames(q.values, q.grid));
        }
        return out;
      }, py::arg("q1"), py::arg("q2_aligned"), py::arg("steps") = 5);

  // Statistics
  m.def("karcher_mean", [](const std::vector<Array>& qs, int max_iter, double tol) {
        std::vector<Tsrvf> in;
        for (const Array& a : qs) in.push_back(to_tsrvf(a, std::nullopt));
        KarcherConfig cfg;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        MeanResult r;
        {
          py::gil_scoped_release release;
          r = karcher_mean(in, cfg);
        }
        py::dict d;
        d["mean"] = from_frames(r.mean_tsrvf.values, r.mean_tsrvf.grid);
        std::vector<Eigen::VectorXd> warps;
        for (const TimeWarp& w : r.warps) warps.push_back(w.samples);
        d["warps"] = warps;
        d["cost_trace"] = r.cost_trace;
        d["iterations"] = r.iterations;
        d["converged"] = r.converged;
        return d;
      }, py::arg("qs"), py::arg("max_iter") = 20, py::arg("tol") = 1e-6);

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("k", &PcaModel::k)
      .def_readonly("sample_size", &PcaModel::sample_size)
      .def_readonly("rank_deficient", &PcaModel::rank_deficient)
      .def_readonly("eigenvalues", &PcaModel::eigenvalues)
      .def_property_readonly("mean", [](const PcaModel& p) { return from_frames(p.mean.values, p.mean.grid); })
      .def("as_dict", &pca_dict)
      .def("project", [](const PcaModel& p, const Array& q) { return project(p, to_tsrvf(q, p.mean.times)); })
      .def("reconstruct", [](const PcaModel& p, const Eigen::VectorXd& c, int k) {
            const Tsrvf q = reconstruct(p, c, k);
            return from_frames(q.values, q.grid);
          }, py::arg("coeffs"), py::arg("k") = -1)
      .def("principal_path", [](const PcaModel& p, int i, const std::vector<double>& taus) {
            std::vector<Array> out;
            for (const Tsrvf& q : principal_path(p, i, taus)) out.push_back(from_frames(q.values, q.grid));
            return out;
          }, py::arg("i"), py::arg("taus"))
      .def("sample", [](const PcaModel& p, std::uint64_t seed, double clamp) {
            const Tsrvf q = sample_random(p, seed, clamp);
            return from_frames(q.values, q.grid);
          }, py::arg("seed"), py::arg("clamp") = 1.5)
      .def("save", [](const PcaModel& p, const std::filesystem::path& path) { write_model(path, p); })
      .def_static("load", [](const std::filesystem::path& path) { return read_model(path); });

  m.def("pca", [](const std::vector<Array>& aligned, const Array& mean, int k) {
        std::vector<Tsrvf> in;
        for (const Array& a : aligned) in.push_back(to_tsrvf(a, std::nullopt));
        return pca(in, to_tsrvf(mean, std::nullopt), k);
      }, py::arg("aligned"), py::arg("mean"), py::arg("k"));

  // IO
  m.def("write_sequence", [](const std::filesystem::path& dir, const Array& surfaces, std::optional<std::vector<double>> times) {
        SurfaceSequence s;
        s.frames = to_surfaces(surfaces);
        s.times = times_or_uniform(times, s.size());
        write_sequence(dir, s);
      }, py::arg("dir"), py::arg("surfaces"), py::arg("times") = py::none());
  m.def("read_sequence", [](const std::filesystem::path& dir) {
        const SurfaceSequence s = read_sequence(dir);
        return py::make_tuple(from_surfaces(s.frames), s.times);
      }, py::arg("dir"));
  m.def("export_mesh", [](const std::filesystem::path& path, const Array& f) { export_mesh(path, to_surface(f)); },
        py::arg("path"), py::arg("surface"));
  m.def("import_grid_mesh", [](const std::filesystem::path& path, int nu, int nv) {
        return from_surface(import_grid_mesh(path, nu, nv));
      }, py::arg("path"), py::arg("nu"), py::arg("nv"));

  // Evaluation protocols; each returns the parsed report.
  m.def("eval_temporal", [](std::uint64_t seed, int trials, int nu, int nv, int frames) {
        TemporalEvalConfig c;
        c.seed = seed;
        c.trials = trials;
        c.nu = nu;
        c.nv = nv;
        c.frames = frames;
        std::string text;
        {
          py::gil_scoped_release release;
          text = eval_temporal(c).to_json();
        }
        return parse_json(text);
      }, py::arg("seed") = 0, py::arg("trials") = 20, py::arg("nu") = 32, py::arg("nv") = 32, py::arg("frames") = 64);
  m.def("eval_spatial", [](std::uint64_t seed, int trials, int nu, int nv) {
        SpatialEvalConfig c;
        c.seed = seed;
        c.trials = trials;
        c.nu = nu;
        c.nv = nv;
        std::string text;
        {
          py::gil_scoped_release release;
          text = eval_spatial(c).to_json();
        }
        return parse_json(text);
      }, py::arg("seed") = 0, py::arg("trials") = 20, py::arg("nu") = 64, py::arg("nv") = 64);
  m.def("eval_pca", [](std::uint64_t seed, int items, int nu, int nv, int frames) {
        PcaEvalConfig c;
        c.seed = seed;
        c.items = items;
        c.nu = nu;
        c.nv = nv;
        c.frames = frames;
        std::string text;
        {
          py::gil_scoped_release release;
          text = eval_pca(c).to_json();
        }
        return parse_json(text);
      }, py::arg("seed") = 0, py::arg("items") = 25, py::arg("nu") = 32, py::arg("nv") = 32, py::arg("frames") = 32);
}
