#include "nlhet/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "nlhet/errors.hpp"

namespace nlhet {

namespace {

[[noreturn]] void fail_at(const toml::source_region& r, const std::string& msg) {
  throw ParseError(msg, int(r.begin.line), int(r.begin.column));
}

[[noreturn]] void fail(const toml::node& n, const std::string& msg) { fail_at(n.source(), msg); }

double as_real(const toml::node& n, const std::string& key) {
  if (n.is_number()) return *n.value<double>();
  fail(n, key + ": expected a number");
}

long as_int(const toml::node& n, const std::string& key) {
  if (n.is_integer()) return long(*n.value<std::int64_t>());
  fail(n, key + ": expected an integer");
}

bool as_bool(const toml::node& n, const std::string& key) {
  if (n.is_boolean()) return *n.value<bool>();
  fail(n, key + ": expected true or false");
}

std::string as_string(const toml::node& n, const std::string& key) {
  if (n.is_string()) return *n.value<std::string>();
  fail(n, key + ": expected a string");
}

std::vector<double> as_reals(const toml::node& n, const std::string& key) {
  std::vector<double> out;
  if (const auto* arr = n.as_array()) {
    for (const auto& e : *arr) out.push_back(as_real(e, key));
    return out;
  }
  out.push_back(as_real(n, key));
  return out;
}

template <class E>
E as_enum(const toml::node& n, const std::string& key, const std::map<std::string, E>& names) {
  std::string s = as_string(n, key);
  auto it = names.find(s);
  if (it != names.end()) return it->second;
  std::string all;
  for (const auto& [k, v] : names) all += (all.empty() ? "" : ", ") + k;
  fail(n, key + ": unknown value '" + s + "' (expected one of " + all + ")");
}

using Handler = std::function<void(const toml::node&, const std::string&)>;
using Section = std::map<std::string, Handler>;

const std::map<std::string, KernelForm> kKernelForms{
    {"power", KernelForm::PowerLaw}, {"truncated_power", KernelForm::TruncatedPower}, {"tabulated", KernelForm::Tabulated}};
const std::map<std::string, PotentialForm> kPotentialForms{
    {"cosine", PotentialForm::Cosine}, {"quartic", PotentialForm::QuarticDoubleWell}, {"tabulated", PotentialForm::Tabulated}};
const std::map<std::string, ModulationForm> kModulationForms{{"constant", ModulationForm::Constant},
                                                             {"cosine", ModulationForm::CosinePerturbation},
                                                             {"tabulated", ModulationForm::Tabulated}};
const std::map<std::string, StepRule> kStepRules{{"armijo", StepRule::BacktrackingArmijo}, {"fixed", StepRule::FixedStep}};
const std::map<std::string, BumpCenter> kCenters{{"k", BumpCenter::K}, {"inverse_k", BumpCenter::InverseK}};

template <class E>
std::string enum_name(E v, const std::map<std::string, E>& names) {
  for (const auto& [k, e] : names)
    if (e == v) return k;
  return "?";
}

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

std::string nums(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

}  // namespace

Grid RunConfig::grid() const {
  if (grid_n) return Grid::make(grid_R, grid_n);
  return Grid::with_spacing(grid_R, grid_h);
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw ParseError(std::string(e.description()), int(b.line), int(b.column));
  }

  RunConfig c;
  auto& k = c.spec.kernel;
  auto& p = c.spec.potential;
  auto& m = c.spec.modulation;
  std::vector<double> pot_u, pot_w, mod_x, mod_a;
  const toml::node *pot_tab = nullptr, *mod_tab = nullptr;
  bool have_n = false, have_h = false;

  auto real = [](double& dst) { return [&dst](const toml::node& n, const std::string& key) { dst = as_real(n, key); }; };
  auto reals = [](std::vector<double>& dst) {
    return [&dst](const toml::node& n, const std::string& key) { dst = as_reals(n, key); };
  };
  auto integer = [](int& dst) {
    return [&dst](const toml::node& n, const std::string& key) { dst = int(as_int(n, key)); };
  };

  std::map<std::string, Section> sections;
  sections["grid"] = {
      {"R", real(c.grid_R)},
      {"n",
       [&](const toml::node& n, const std::string& key) {
         long v = as_int(n, key);
         if (v < 3 || v % 2 == 0) fail(n, key + ": must be an odd integer >= 3");
         c.grid_n = std::size_t(v);
         have_n = true;
       }},
      {"h",
       [&](const toml::node& n, const std::string& key) {
         c.grid_h = as_real(n, key);
         have_h = true;
       }},
  };
  sections["kernel"] = {
      {"form", [&](const toml::node& n, const std::string& key) { k.form = as_enum(n, key, kKernelForms); }},
      {"s", real(k.s)},
      {"c", real(k.c)},
      {"c_far", real(k.c_far)},
      {"theta0", real(k.theta0)},
      {"Theta0", real(k.Theta0)},
      {"r0", real(k.r0)},
      {"table_r", reals(k.table_r)},
      {"table_k", reals(k.table_k)},
  };
  sections["potential"] = {
      {"form", [&](const toml::node& n, const std::string& key) { p.form = as_enum(n, key, kPotentialForms); }},
      {"zeta1", real(p.zeta1)},
      {"zeta2", real(p.zeta2)},
      {"c0", real(p.c0)},
      {"C0_growth", real(p.C0_growth)},
      {"delta0", real(p.delta0)},
      {"table_u",
       [&](const toml::node& n, const std::string& key) {
         pot_u = as_reals(n, key);
         pot_tab = &n;
       }},
      {"table_w", reals(pot_w)},
  };
  sections["modulation"] = {
      {"form", [&](const toml::node& n, const std::string& key) { m.form = as_enum(n, key, kModulationForms); }},
      {"value", real(m.value)},
      {"base", real(m.base)},
      {"eps", real(m.eps)},
      {"delta_freq", real(m.delta_freq)},
      {"a_lower", real(m.a_lower)},
      {"a_upper", real(m.a_upper)},
      {"m1", real(m.m1)},
      {"m2", real(m.m2)},
      {"omega", real(m.omega)},
      {"theta", real(m.theta)},
      {"gamma", real(m.gamma)},
      {"table_x",
       [&](const toml::node& n, const std::string& key) {
         mod_x = as_reals(n, key);
         mod_tab = &n;
       }},
      {"table_a", reals(mod_a)},
  };
  sections["obstacles"] = {
      {"tau", real(c.obstacles.tau)},
      {"r", real(c.obstacles.r)},
      {"b1", real(c.obstacles.b1)},
      {"b2", real(c.obstacles.b2)},
  };
  sections["solver"] = {
      {"max_iters", integer(c.solver.max_iters)},
      {"grad_tol", real(c.solver.grad_tol)},
      {"step_rule", [&](const toml::node& n, const std::string& key) { c.solver.step_rule = as_enum(n, key, kStepRules); }},
      {"c1", real(c.solver.c1)},
      {"shrink", real(c.solver.shrink)},
      {"fixed_step", real(c.solver.fixed_step)},
      {"energy_decrease_min", real(c.solver.energy_decrease_min)},
      {"refresh_every", integer(c.solver.refresh_every)},
  };
  sections["continuation"] = {
      {"eta_seq", reals(c.schedule.eta_seq)},
      {"mu_seq", reals(c.schedule.mu_seq)},
      {"warm_start", [&](const toml::node& n, const std::string& key) { c.schedule.warm_start = as_bool(n, key); }},
  };
  auto& d = c.diagnostics;
  sections["diagnostics"] = {
      {"rho", real(d.rho)},
      {"stickiness_rho", real(d.stickiness_rho)},
      {"stickiness_tol", real(d.stickiness_tol)},
      {"x1", real(d.x1)},
      {"x2", real(d.x2)},
      {"stickiness_samples", integer(d.stickiness_samples)},
      {"ls_eta", real(d.ls_eta)},
      {"ls_mu", real(d.ls_mu)},
      {"ls_intervals",
       [&](const toml::node& n, const std::string& key) {
         const auto* arr = n.as_array();
         if (!arr) fail(n, key + ": expected an array of [lo, hi] pairs");
         d.ls_intervals.clear();
         for (const auto& e : *arr) {
           auto v = as_reals(e, key);
           if (v.size() != 2 || !(v[1] > v[0])) fail(e, key + ": each entry must be [lo, hi] with lo < hi");
           d.ls_intervals.push_back({v[0], v[1]});
         }
       }},
      {"holder_alpha", real(d.holder_alpha)},
  };
  auto& b = c.bench;
  sections["bench"] = {
      {"bump_s", reals(b.bump_s)},
      {"bump_center", [&](const toml::node& n, const std::string& key) { b.bump_center = as_enum(n, key, kCenters); }},
      {"bump_k0", integer(b.bump_k0)},
      {"bump_k1", integer(b.bump_k1)},
      {"bump_nodes", integer(b.bump_nodes)},
      {"trace_k0", integer(b.trace_k0)},
      {"trace_k1", integer(b.trace_k1)},
      {"trace_nodes", integer(b.trace_nodes)},
      {"stability_tol", real(b.stability_tol)},
  };

  for (const auto& [name, node] : root) {
    std::string sec(name.str());
    auto it = sections.find(sec);
    if (it == sections.end()) fail_at(name.source(), "unknown section '" + sec + "'");
    const auto* tbl = node.as_table();
    if (!tbl) fail(node, "'" + sec + "' must be a section");
    for (const auto& [kname, kn] : *tbl) {
      std::string key = sec + "." + std::string(kname.str());
      auto h = it->second.find(std::string(kname.str()));
      if (h == it->second.end()) fail_at(kname.source(), "unknown key '" + key + "'");
      h->second(kn, key);
    }
  }

  auto pos_fail = [&](const std::string& msg) { throw ParseError(msg, 1, 1); };
  if (have_n && have_h) pos_fail("grid: give grid.n or grid.h, not both");
  if (!(c.grid_R > 0.0)) pos_fail("grid.R must be positive");
  if (!have_n && !(c.grid_h > 0.0 && c.grid_h < c.grid_R)) pos_fail("grid.h must lie in (0, grid.R)");
  if (p.form == PotentialForm::Tabulated) {
    if (pot_u.size() != pot_w.size() || pot_u.size() < 4) {
      if (pot_tab) fail(*pot_tab, "potential.table_u / table_w: need matching lists of at least 4 samples");
      pos_fail("potential.form = tabulated needs potential.table_u and potential.table_w");
    }
    try {
      p.table = TabulatedCurve::make(pot_u, pot_w);
    } catch (const Error& e) {
      fail(*pot_tab, std::string("potential table: ") + e.what());
    }
  }
  if (m.form == ModulationForm::Tabulated) {
    if (mod_x.size() != mod_a.size() || mod_x.size() < 4) {
      if (mod_tab) fail(*mod_tab, "modulation.table_x / table_a: need matching lists of at least 4 samples");
      pos_fail("modulation.form = tabulated needs modulation.table_x and modulation.table_a");
    }
    try {
      m.table = TabulatedCurve::make(mod_x, mod_a);
    } catch (const Error& e) {
      fail(*mod_tab, std::string("modulation table: ") + e.what());
    }
  }
  if (std::isnan(d.x1) != std::isnan(d.x2)) pos_fail("diagnostics.x1 and diagnostics.x2 go together");
  c.solver.validate();
  c.schedule.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream o;
  const auto& k = c.spec.kernel;
  const auto& p = c.spec.potential;
  const auto& m = c.spec.modulation;
  Grid g = c.grid();
  o << "grid.R = " << num(g.R) << "\n" << "grid.n = " << g.n << "\n";
  o << "kernel.form = " << enum_name(k.form, kKernelForms) << "\n"
    << "kernel.s = " << num(k.s) << "\n"
    << "kernel.c = " << num(k.c) << "\n"
    << "kernel.c_far = " << num(k.c_far) << "\n"
    << "kernel.theta0 = " << num(k.theta0) << "\n"
    << "kernel.Theta0 = " << num(k.Theta0) << "\n"
    << "kernel.r0 = " << num(k.r0) << "\n"
    << "kernel.table_r = " << nums(k.table_r) << "\n"
    << "kernel.table_k = " << nums(k.table_k) << "\n";
  o << "potential.form = " << enum_name(p.form, kPotentialForms) << "\n"
    << "potential.zeta1 = " << num(p.zeta1) << "\n"
    << "potential.zeta2 = " << num(p.zeta2) << "\n"
    << "potential.c0 = " << num(p.c0) << "\n"
    << "potential.C0_growth = " << num(p.C0_growth) << "\n"
    << "potential.delta0 = " << num(p.delta0) << "\n";
  if (p.table) o << "potential.table_u = " << nums(p.table->xs()) << "\npotential.table_w = " << nums(p.table->ys()) << "\n";
  o << "modulation.form = " << enum_name(m.form, kModulationForms) << "\n"
    << "modulation.value = " << num(m.value) << "\n"
    << "modulation.base = " << num(m.base) << "\n"
    << "modulation.eps = " << num(m.eps) << "\n"
    << "modulation.delta_freq = " << num(m.delta_freq) << "\n"
    << "modulation.a_lower = " << num(m.a_lower) << "\n"
    << "modulation.a_upper = " << num(m.a_upper) << "\n"
    << "modulation.m1 = " << num(m.m1) << "\n"
    << "modulation.m2 = " << num(m.m2) << "\n"
    << "modulation.omega = " << num(m.omega) << "\n"
    << "modulation.theta = " << num(m.theta) << "\n"
    << "modulation.gamma = " << num(m.gamma) << "\n";
  if (m.table) o << "modulation.table_x = " << nums(m.table->xs()) << "\nmodulation.table_a = " << nums(m.table->ys()) << "\n";
  o << "obstacles.tau = " << num(c.obstacles.tau) << "\n"
    << "obstacles.r = " << num(c.obstacles.r) << "\n"
    << "obstacles.b1 = " << num(c.obstacles.b1) << "\n"
    << "obstacles.b2 = " << num(c.obstacles.b2) << "\n";
  o << "solver.max_iters = " << c.solver.max_iters << "\n"
    << "solver.grad_tol = " << num(c.solver.resolved_grad_tol(g.n)) << "\n"
    << "solver.step_rule = " << enum_name(c.solver.step_rule, kStepRules) << "\n"
    << "solver.c1 = " << num(c.solver.c1) << "\n"
    << "solver.shrink = " << num(c.solver.shrink) << "\n"
    << "solver.fixed_step = " << num(c.solver.fixed_step) << "\n"
    << "solver.energy_decrease_min = " << num(c.solver.energy_decrease_min) << "\n"
    << "solver.refresh_every = " << c.solver.refresh_every << "\n";
  o << "continuation.eta_seq = " << nums(c.schedule.eta_seq) << "\n"
    << "continuation.mu_seq = " << nums(c.schedule.mu_seq) << "\n"
    << "continuation.warm_start = " << (c.schedule.warm_start ? "true" : "false") << "\n";
  const auto& d = c.diagnostics;
  o << "diagnostics.rho = " << num(d.rho) << "\n"
    << "diagnostics.stickiness_rho = " << num(d.stickiness_rho) << "\n"
    << "diagnostics.stickiness_tol = " << num(d.stickiness_tol) << "\n"
    << "diagnostics.x1 = " << num(d.x1) << "\n"
    << "diagnostics.x2 = " << num(d.x2) << "\n"
    << "diagnostics.stickiness_samples = " << d.stickiness_samples << "\n"
    << "diagnostics.ls_eta = " << num(d.ls_eta) << "\n"
    << "diagnostics.ls_mu = " << num(d.ls_mu) << "\n"
    << "diagnostics.ls_intervals = [";
  for (std::size_t i = 0; i < d.ls_intervals.size(); ++i)
    o << (i ? ", " : "") << "[" << num(d.ls_intervals[i].lo) << ", " << num(d.ls_intervals[i].hi) << "]";
  o << "]\n"
    << "diagnostics.holder_alpha = " << num(d.holder_alpha) << "\n";
  const auto& b = c.bench;
  o << "bench.bump_s = " << nums(b.bump_s) << "\n"
    << "bench.bump_center = " << enum_name(b.bump_center, kCenters) << "\n"
    << "bench.bump_k0 = " << b.bump_k0 << "\n"
    << "bench.bump_k1 = " << b.bump_k1 << "\n"
    << "bench.bump_nodes = " << b.bump_nodes << "\n"
    << "bench.trace_k0 = " << b.trace_k0 << "\n"
    << "bench.trace_k1 = " << b.trace_k1 << "\n"
    << "bench.trace_nodes = " << b.trace_nodes << "\n"
    << "bench.stability_tol = " << num(b.stability_tol) << "\n";
  return o.str();
}

}  // namespace nlhet
