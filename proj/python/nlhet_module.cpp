#include <cmath>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nlhet/appendix_bench.hpp"
#include "nlhet/config.hpp"
#include "nlhet/diagnostics.hpp"
#include "nlhet/errors.hpp"
#include "nlhet/io.hpp"
#include "nlhet/model.hpp"
#include "nlhet/solver.hpp"

namespace py = pybind11;
using namespace nlhet;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const std::vector<double>& v) {
  Array a(py::ssize_t(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const Array& a) {
  if (a.ndim() != 1) throw PreconditionError("expected a one-dimensional array");
  return {a.data(), a.data() + a.size()};
}

Array nodes(const Grid& g) {
  std::vector<double> x(g.n);
  for (std::size_t i = 0; i < g.n; ++i) x[i] = g.x(std::int64_t(i));
  return to_array(x);
}

// Profile on [-R, R]; NaN far fields are taken from the end values.
Profile profile_from(const Array& values, double R, double left = kNaN, double right = kNaN) {
  Profile q;
  q.values = from_array(values);
  if (q.values.size() < 3 || q.values.size() % 2 == 0)
    throw PreconditionError("profile needs an odd number >= 3 of samples");
  q.grid = Grid::make(R, q.values.size());
  q.left_const = std::isnan(left) ? q.values.front() : left;
  q.right_const = std::isnan(right) ? q.values.back() : right;
  return q;
}

py::dict solve(const RunConfig& c) {
  ContinuationOptions opt;
  opt.obstacles = c.obstacles;
  opt.schedule = c.schedule;
  opt.solver = c.solver;
  Grid g = c.grid();
  SolveResult r;
  {
    py::gil_scoped_release unlocked;
    r = continuation_run(c.spec, g, opt);
  }
  Profile qs = make_reference(g, c.spec.reference());
  py::list stages;
  for (const auto& st : r.trace) {
    py::dict d;
    d["label"] = st.label;
    d["eta"] = st.eta;
    d["mu"] = st.mu;
    d["iterations"] = st.iterations;
    d["converged"] = st.converged;
    d["contacts"] = st.contacts;
    d["energies"] = to_array(st.energies);
    stages.append(d);
  }
  py::dict out;
  out["x"] = nodes(g);
  out["q"] = to_array(r.profile.values);
  out["qsharp"] = to_array(qs.values);
  out["converged"] = r.converged;
  out["residual_max"] = r.residual_max;
  out["iterations"] = r.iterations;
  out["energy"] = r.breakdown.total;
  out["limit_pass"] = r.limit.pass();
  out["stages"] = stages;
  return out;
}

}  // namespace

PYBIND11_MODULE(_nlhet, m) {
  m.doc() = "Heteroclinic layers for nonlocal phase-field energies";

  auto base = py::register_exception<Error>(m, "NlhetError", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<RunConfig>(m, "Config")
      .def_property_readonly("R", [](const RunConfig& c) { return c.grid().R; })
      .def_property_readonly("n", [](const RunConfig& c) { return c.grid().n; })
      .def_property_readonly("s", [](const RunConfig& c) { return c.spec.kernel.s; })
      .def("canonical", &canonical_config)
      .def("digest", [](const RunConfig& c) { return sha256_hex(canonical_config(c)); });

  m.def("parse_config", [](const std::string& text) { return parse_config(text); }, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));

  m.def(
      "verify_model",
      [](const RunConfig& c) {
        py::list out;
        for (const auto& h : verify_model(c.spec).checks) {
          py::dict d;
          d["name"] = h.name;
          d["applicable"] = h.applicable;
          d["pass"] = h.pass;
          d["measured"] = h.measured;
          d["bound"] = h.bound;
          out.append(d);
        }
        return out;
      },
      py::arg("config"));

  m.def("solve", &solve, py::arg("config"));

  m.def(
      "explicit_layer", [](const Array& x) { return py::vectorize([](double t) { return explicit_layer(t); })(x); },
      py::arg("x"));

  m.def(
      "clean_intervals",
      [](const Array& values, double R, double rho, const std::vector<double>& wells) {
        CleanIntervalReport r = find_clean_intervals(profile_from(values, R), rho, wells);
        std::vector<std::tuple<double, double, double>> out;
        for (const auto& I : r.intervals) out.emplace_back(I.lo, I.hi, I.well);
        return out;
      },
      py::arg("values"), py::arg("R"), py::arg("rho"), py::arg("wells"));

  m.def(
      "tail_exponent",
      [](const Array& values, double R, const std::string& side, double left, double right) {
        if (side != "left" && side != "right") throw PreconditionError("side must be 'left' or 'right'");
        Profile q = profile_from(values, R, left, right);
        return fit_tail_decay(q, side == "left" ? Side::Left : Side::Right).fitted_exponent;
      },
      py::arg("values"), py::arg("R"), py::arg("side") = "right", py::arg("left") = kNaN, py::arg("right") = kNaN);

  m.def(
      "layer_fit",
      [](const Array& values, double R) {
        ShiftFit f = best_shift_fit(profile_from(values, R), explicit_layer, -1.0, 1.0);
        return std::make_pair(f.shift, f.linf);
      },
      py::arg("values"), py::arg("R"));

  m.def("appendix_bench", []() {
    BenchReport r = run_appendix_bench(BenchConfig{});
    py::list tables;
    for (const auto& t : r.tables) {
      py::dict d;
      d["family"] = t.family;
      d["pass"] = t.pass;
      d["worst_l2"] = t.worst_l2;
      d["worst_hs"] = t.worst_hs;
      tables.append(d);
    }
    py::dict out;
    out["pass"] = r.pass;
    out["stable"] = r.stable;
    out["tables"] = tables;
    return out;
  });
}
