#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

#include "nlhet/appendix_bench.hpp"
#include "nlhet/config.hpp"
#include "nlhet/diagnostics.hpp"
#include "nlhet/errors.hpp"
#include "nlhet/io.hpp"
#include "nlhet/model.hpp"
#include "nlhet/obstacles.hpp"
#include "nlhet/solver.hpp"

using namespace nlhet;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kEnv = 3 };

std::string pf(bool b) { return b ? "pass" : "fail"; }

void warn(const std::string& m) { std::cerr << "warning: " << m << "\n"; }

// finite doubles as numbers, the rest as strings (json has no inf/nan)
json jnum(double v) { return std::isfinite(v) ? json(v) : json(fmt(v)); }

std::string stage_name(std::size_t i, const char* stem, const char* ext) {
  char b[64];
  std::snprintf(b, sizeof b, "%s_%02zu.%s", stem, i, ext);
  return b;
}

class OutDir {
 public:
  explicit OutDir(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory '" + dir + "'");
    lock_ = std::make_unique<DirLock>(dir);
  }
  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }
  // Written files are remembered in write order for the manifest.
  std::string write(const std::string& name, const std::string& content) {
    std::string p = path(name);
    write_file_atomic(p, content);
    if (std::find(outputs_.begin(), outputs_.end(), p) == outputs_.end()) outputs_.push_back(p);
    return p;
  }
  void adopt(const std::string& name) {
    std::string p = path(name);
    if (std::find(outputs_.begin(), outputs_.end(), p) == outputs_.end()) outputs_.push_back(p);
  }
  void finish(RunManifest m) {
    m.outputs = outputs_;
    std::sort(m.outputs.begin(), m.outputs.end());
    write_manifest(path("manifest.json"), m);
  }

 private:
  std::string dir_;
  std::unique_ptr<DirLock> lock_;
  std::vector<std::string> outputs_;
};

json model_json(const ModelReport& r) {
  json j;
  j["all_pass"] = r.all_pass();
  j["checks"] = json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"label", c.label},
                           {"applicable", c.applicable},
                           {"pass", c.pass},
                           {"measured", jnum(c.measured)},
                           {"bound", jnum(c.bound)},
                           {"worst_at", jnum(c.worst_at)},
                           {"detail", c.detail}});
  j["notes"] = r.notes;
  return j;
}

std::string model_text(const ModelReport& r) {
  std::ostringstream o;
  for (const auto& c : r.checks) {
    o << (c.applicable ? (c.pass ? "PASS " : "FAIL ") : "n/a  ") << c.name << "  " << c.label;
    if (c.applicable) o << "  measured " << fmt(c.measured) << " bound " << fmt(c.bound);
    if (!c.detail.empty()) o << "  [" << c.detail << "]";
    o << "\n";
  }
  for (const auto& n : r.notes) o << "note: " << n << "\n";
  o << (r.all_pass() ? "all hypotheses pass\n" : "some hypotheses fail\n");
  return o.str();
}

// homogeneous model with the closed-form layer pi + 2 arctan x
bool explicit_layer_model(const ProblemSpec& p) {
  if (p.kernel.form != KernelForm::PowerLaw || p.kernel.s != 0.5) return false;
  if (std::fabs(resolve(p.kernel).c - 1.0 / kPi) > 1e-12) return false;
  if (p.potential.form != PotentialForm::Cosine || p.potential.zeta1 != 0.0 ||
      std::fabs(p.potential.zeta2 - 2.0 * kPi) > 1e-12)
    return false;
  return p.modulation.form == ModulationForm::Constant && p.modulation.value == 1.0;
}

std::string digest(const RunConfig& c) { return sha256_hex(canonical_config(c)); }

json limit_json(const LimitCheck& l) {
  return {{"tol", l.tol},
          {"left_dev", l.left_dev},
          {"right_dev", l.right_dev},
          {"left_outer", l.left_outer},
          {"left_inner", l.left_inner},
          {"right_outer", l.right_outer},
          {"right_inner", l.right_inner},
          {"pass", l.pass()}};
}

json clean_json(const CleanIntervalReport& r) {
  json j{{"rho", r.rho}, {"min_length", r.min_length}, {"intervals", json::array()}};
  for (const auto& I : r.intervals)
    j["intervals"].push_back({{"lo", I.lo}, {"hi", I.hi}, {"well", I.well}, {"sup_deviation", I.sup_deviation}});
  j["clean_points"] = r.clean_points;
  return j;
}

bool both_tails(const CleanIntervalReport& r) {
  bool l = false, rt = false;
  for (const auto& I : r.intervals) {
    if (I.lo < 0.0) l = true;
    if (I.hi > 0.0) rt = true;
  }
  return l && rt && r.intervals.size() >= 2;
}

json tail_json(const TailFit& f, double s) {
  double target = -2.0 * s;
  return {{"side", f.side == Side::Left ? "left" : "right"},
          {"fitted_exponent", f.fitted_exponent},
          {"fitted_constant", f.fitted_constant},
          {"r_squared", f.r_squared},
          {"target", target},
          {"relative_error", std::fabs(f.fitted_exponent / target - 1.0)}};
}

// ---------------------------------------------------------------- verify-model

int cmd_verify_model(const std::string& config, const std::string& out) {
  RunConfig c = load_config(config);
  ModelReport r = verify_model(c.spec);
  std::cout << model_text(r);
  OutDir od(out);
  od.write("model_report.txt", model_text(r));
  od.write("model_report.json", model_json(r).dump(2) + "\n");
  RunManifest m{digest(c), "verify-model", {}, {}};
  for (const auto& ch : r.checks) m.verdicts[ch.name] = ch.applicable ? pf(ch.pass) : "n/a";
  od.finish(m);
  if (!r.all_pass()) {
    for (const auto& ch : r.checks)
      if (ch.applicable && !ch.pass) std::cerr << "hypothesis failed: " << ch.name << " (" << ch.label << ")\n";
    return kFail;
  }
  return kPass;
}

// ---------------------------------------------------------------- solve

struct SolveState {
  std::size_t completed = 0;
  json stages = json::array();
};

int cmd_solve(const std::string& config, const std::string& out, bool resume) {
  RunConfig c = load_config(config);
  ModelReport mr = verify_model(c.spec);
  if (!mr.all_pass()) {
    std::cerr << model_text(mr);
    throw PreconditionError("model hypotheses fail; run verify-model for the report");
  }
  const std::string dg = digest(c);
  const Grid grid = c.grid();
  OutDir od(out);
  std::error_code ec;
  fs::create_directories(od.path("stages"), ec);
  if (ec) throw IoError("cannot create '" + od.path("stages") + "'");

  ContinuationOptions opt;
  opt.obstacles = c.obstacles;
  opt.schedule = c.schedule;
  opt.solver = c.solver;
  const std::size_t total = stage_count(c.schedule);

  SolveState st;
  Profile q0 = make_reference(grid, c.spec.reference());
  const Profile qsharp = q0;
  if (resume && fs::exists(od.path("progress.json"))) {
    json p = json::parse(read_file(od.path("progress.json")));
    if (p.value("config_digest", "") != dg)
      throw PreconditionError("--resume: progress.json belongs to a different configuration");
    st.completed = p.at("completed").get<std::size_t>();
    st.stages = p.at("stages");
    if (st.completed > total || st.stages.size() != st.completed) throw SchemaError("progress.json is inconsistent");
    if (st.completed == total) st.completed = total - 1, st.stages.erase(st.stages.end() - 1);
    if (st.completed > 0) {
      ProfileDump d = read_profile_csv(od.path("stages/" + stage_name(st.completed - 1, "stage", "csv")));
      if (d.q.size() != grid.n) throw SchemaError("stage dump does not match the configured grid");
      q0.values = d.q.values;
      q0.left_const = d.q.left_const;
      q0.right_const = d.q.right_const;
      std::cerr << "resuming after stage " << st.completed << " of " << total << "\n";
    }
    for (std::size_t i = 0; i < st.completed; ++i) {
      od.adopt("stages/" + stage_name(i, "stage", "csv"));
      od.adopt("stages/" + stage_name(i, "trace", "csv"));
    }
  }
  opt.skip_stages = st.completed;
  opt.on_stage = [&](const StageRecord& r, const Profile& q) {
    od.write("stages/" + stage_name(r.index, "stage", "csv"), profile_csv(q, qsharp));
    od.write("stages/" + stage_name(r.index, "trace", "csv"), energy_trace_csv({r}));
    st.stages.push_back({{"index", r.index},
                         {"label", r.label},
                         {"eta", r.eta},
                         {"mu", r.mu},
                         {"iterations", r.iterations},
                         {"converged", r.converged},
                         {"obstacles", r.obstacles},
                         {"contacts", r.contacts},
                         {"band_pass", r.band.pass},
                         {"band_dev", std::max({r.band.phi_left, r.band.phi_right, r.band.psi_left, r.band.psi_right})},
                         {"band_limit", r.band.limit},
                         {"energy_start", r.energy_start},
                         {"energy_end", r.energy_end},
                         {"grad_norm", r.grad_norm}});
    st.completed = r.index + 1;
    json p{{"config_digest", dg}, {"completed", st.completed}, {"stages", st.stages}};
    od.write("progress.json", p.dump(2) + "\n");
    std::cerr << "stage " << r.index + 1 << "/" << total << " " << r.label << ": " << r.iterations << " iterations"
              << (r.converged ? "" : " (not converged)") << "\n";
  };

  SolveResult res;
  try {
    res = continuation_run(c.spec, q0, opt);
  } catch (const ConvergenceError& e) {
    std::cerr << "continuation failed at stage '" << e.stage << "': " << e.what() << "\n";
    return kFail;
  } catch (const StagnationError& e) {
    std::size_t next = st.completed;
    std::cerr << "continuation failed at stage " << next + 1 << "/" << total << ": " << e.what() << "\n";
    return kFail;
  }
  for (const auto& n : res.notes) warn(n);

  // energy trace from the per-stage files so a resumed run matches a fresh one
  std::string trace = "iter,viscous,penalty,potential,interaction,total,grad_norm\n";
  long iter = 0;
  for (std::size_t i = 0; i < total; ++i) {
    std::istringstream in(read_file(od.path("stages/" + stage_name(i, "trace", "csv"))));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      trace += std::to_string(iter++) + line.substr(line.find(','));
      trace += "\n";
    }
  }

  const ProblemSpec& spec = c.spec;
  const Profile& q = res.profile;
  od.write("profile.csv", profile_csv(q, qsharp));
  od.write("energy_trace.csv", trace);

  // obstacles of the last constrained stage (eta = 0, smallest mu)
  {
    const bool flip = spec.potential.zeta1 > spec.potential.zeta2;
    ProblemSpec ps = flip ? reflect(spec) : spec;
    ObstacleConfig cfg = make_obstacle_config(ps, c.obstacles);
    auto [phi, psi] = solve_barriers(ps, cfg, grid, 0.0);
    ObstaclePair pair = build_envelopes(phi.u, psi.u, cfg);
    if (flip) {
      auto neg = [](Profile p) {
        for (double& v : p.values) v = -v;
        p.left_const = -p.left_const;
        p.right_const = -p.right_const;
        return p;
      };
      pair = {neg(pair.psi), neg(pair.phi), neg(pair.Psi), neg(pair.Phi)};
    }
    od.write("obstacles.csv", obstacle_csv(pair));
  }

  RunManifest m{dg, "solve", {}, {}};
  json d;
  d["stages"] = st.stages;
  // stage-dependent notes are replaced by the per-stage record so resumed runs match
  std::vector<std::string> notes;
  for (const auto& n : res.notes)
    if (n.rfind("barrier band", 0) != 0) notes.push_back(n);
  d["notes"] = notes;
  double band_worst = 0.0, band_limit = 0.0;
  for (const auto& s : st.stages)
    if (s.value("obstacles", false)) {
      band_worst = std::max(band_worst, s.value("band_dev", 0.0));
      band_limit = s.value("band_limit", 0.0);
    }
  d["barrier_band"] = {{"worst_deviation", band_worst}, {"limit", band_limit}, {"pass", band_worst <= band_limit}};
  d["converged"] = res.converged;
  d["residual_max"] = res.residual_max;
  d["grad_norm"] = res.grad_norm;
  d["energy"] = {{"viscous", res.breakdown.viscous},
                 {"penalty", res.breakdown.penalty},
                 {"potential", res.breakdown.potential},
                 {"interaction", res.breakdown.interaction},
                 {"total", res.breakdown.total}};
  d["limit_check"] = limit_json(res.limit);
  std::size_t contacts = 0;
  for (const auto& s : st.stages)
    if (s.value("obstacles", false)) contacts = s.value("contacts", std::size_t(0));
  d["contacts_last_constrained_stage"] = contacts;
  bool sandwich = true;
  for (double v : q.values)
    if (v < spec.potential.well_lo() || v > spec.potential.well_hi()) sandwich = false;
  d["well_sandwich"] = sandwich;
  CleanIntervalReport cr = find_clean_intervals(q, c.diagnostics.rho, {spec.potential.zeta1, spec.potential.zeta2});
  d["clean_intervals"] = clean_json(cr);
  d["monotonicity_defect"] = monotonicity_defect(q);
  d["tail_fits"] = json::array();
  for (Side sd : {Side::Left, Side::Right}) {
    try {
      TailFit f = fit_tail_decay(q, sd);
      d["tail_fits"].push_back(tail_json(f, spec.kernel.s));
      od.write(sd == Side::Left ? "tail_fit_left.csv" : "tail_fit_right.csv", tail_fit_csv(f));
    } catch (const DegenerateFitError& e) {
      d["tail_fits"].push_back({{"side", sd == Side::Left ? "left" : "right"}, {"error", e.what()}});
    }
  }
  bool mu_guard = c.schedule.positive_mu().front() <= 0.1;
  d["mu_guard"] = mu_guard ? "ok" : "warning";
  if (explicit_layer_model(spec)) {
    ShiftFit sf = best_shift_fit(q, explicit_layer, -1.0, 1.0);
    d["layer_match"] = {{"shift", sf.shift}, {"linf", sf.linf}, {"tol", 0.05}, {"pass", sf.linf <= 0.05}};
    m.verdicts["layer_match"] = pf(sf.linf <= 0.05);
  }
  od.write("diagnostics.json", d.dump(2) + "\n");

  m.verdicts["converged"] = pf(res.converged);
  m.verdicts["limit_check"] = pf(res.limit.pass());
  m.verdicts["residual_max"] = fmt(res.residual_max);
  m.verdicts["contacts"] = std::to_string(contacts);
  m.verdicts["well_sandwich"] = pf(sandwich);
  m.verdicts["barrier_band"] = fmt(band_worst);
  m.verdicts["clean_intervals_both_tails"] = pf(both_tails(cr));
  if (!mu_guard) m.verdicts["mu_guard"] = "warning";
  od.finish(m);

  std::cout << "converged " << (res.converged ? "yes" : "no") << ", residual " << fmt(res.residual_max) << ", energy "
            << fmt(res.breakdown.total) << "\n";
  if (m.verdicts.count("layer_match")) std::cout << "layer_match " << m.verdicts["layer_match"] << "\n";
  bool ok = res.converged && res.limit.pass() && sandwich && (!m.verdicts.count("layer_match") || m.verdicts["layer_match"] == "pass");
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- diagnose

const std::vector<std::string> kChecks{"clean-intervals", "stickiness", "lewy-stampacchia", "holder", "tail-fit",
                                       "monotonicity"};

int cmd_diagnose(const std::string& profile, const std::string& config, std::vector<std::string> checks,
                 const std::string& out) {
  RunConfig c = load_config(config);
  ProfileDump dump = read_profile_csv(profile);
  if (checks.empty()) checks = {"clean-intervals", "stickiness", "lewy-stampacchia", "tail-fit", "monotonicity"};
  for (const auto& k : checks)
    if (std::find(kChecks.begin(), kChecks.end(), k) == kChecks.end())
      throw PreconditionError("unknown check '" + k + "'");

  const ProblemSpec& spec = c.spec;
  const auto& dc = c.diagnostics;
  const Profile& q = dump.q;
  const Grid& g = q.grid;
  const std::vector<double> wells{spec.potential.zeta1, spec.potential.zeta2};
  OutDir od(out);
  RunManifest m{digest(c), "diagnose", {}, {}};
  json rep = json::array();
  bool ok = true;
  auto record = [&](const std::string& name, json inputs, json measured, const std::string& verdict) {
    rep.push_back({{"name", name}, {"inputs", inputs}, {"measured", measured}, {"verdict", verdict}});
    m.verdicts[name] = verdict;
    if (verdict == "fail") ok = false;
    std::cout << name << ": " << verdict << "\n";
  };

  for (const auto& k : checks) {
    if (k == "clean-intervals") {
      CleanIntervalReport r = find_clean_intervals(q, dc.rho, wells);
      record(k, {{"rho", dc.rho}}, clean_json(r), pf(both_tails(r)));
    } else if (k == "stickiness") {
      double r = make_obstacle_config(spec.potential.zeta1 > spec.potential.zeta2 ? reflect(spec) : spec, c.obstacles).r;
      json in{{"rho", dc.stickiness_rho}, {"r", r}, {"tol", dc.stickiness_tol}};
      if (!std::isnan(dc.x1)) {
        StickinessReport s = stickiness_check(q, dc.x1, dc.x2, spec, 0.0, 0.0, dc.stickiness_rho, r, dc.stickiness_tol);
        in["x1"] = dc.x1;
        in["x2"] = dc.x2;
        record(k, in,
               {{"well", s.well},
                {"localized_energy", s.localized_energy},
                {"interaction", s.interaction},
                {"potential", s.potential},
                {"sup_dev", s.sup_dev}},
               pf(s.pass));
      } else {
        StickinessSweep sw = stickiness_sweep(q, spec, 0.0, 0.0, dc.stickiness_rho, r, dc.stickiness_tol,
                                              dc.stickiness_samples);
        in["samples_per_interval"] = dc.stickiness_samples;
        record(k, in,
               {{"points", sw.points},
                {"pairs", sw.pairs.size()},
                {"worst_localized_energy", sw.worst_energy},
                {"worst_sup_dev", sw.worst_dev}},
               sw.pairs.empty() ? "fail" : pf(sw.pass));
      }
    } else if (k == "lewy-stampacchia") {
      const bool flip = spec.potential.zeta1 > spec.potential.zeta2;
      ProblemSpec ps = flip ? reflect(spec) : spec;
      Profile qq = q;
      if (flip) {
        for (double& v : qq.values) v = -v;
        qq.left_const = -qq.left_const;
        qq.right_const = -qq.right_const;
      }
      ObstacleConfig cfg = make_obstacle_config(ps, c.obstacles);
      auto [phi, psi] = solve_barriers(ps, cfg, g, dc.ls_eta);
      ObstaclePair pair = build_envelopes(phi.u, psi.u, cfg);
      std::vector<Interval> Is = dc.ls_intervals;
      if (Is.empty())
        Is = {{-0.8 * g.R, -0.2 * g.R}, {-3.0, 3.0}, {-0.8, 0.8}, {-1.5, -0.5}, {0.5, 1.5}, {0.2 * g.R, 0.8 * g.R}};
      json meas = json::array();
      bool all = true;
      for (const auto& I : Is) {
        LSReport r = lewy_stampacchia_check(qq, pair, ps, dc.ls_eta, dc.ls_mu, I);
        all = all && r.pass;
        meas.push_back({{"lo", I.lo},
                        {"hi", I.hi},
                        {"lower", r.lower},
                        {"upper", r.upper},
                        {"value_min", r.value_min},
                        {"value_max", r.value_max},
                        {"slack", r.slack},
                        {"worst_violation", r.worst_violation},
                        {"pass", r.pass}});
      }
      record(k, {{"eta", dc.ls_eta}, {"mu", dc.ls_mu}}, meas, pf(all));
    } else if (k == "holder") {
      double s = spec.kernel.s;
      double alpha = std::isnan(dc.holder_alpha) ? std::min(s, 0.9 * 2.0 * s) : dc.holder_alpha;
      CleanIntervalReport r = find_clean_intervals(q, dc.rho, wells);
      double worst = 0.0;
      json per = json::array();
      for (const auto& I : r.intervals) {
        Interval J{I.lo + 5.0, I.hi - 5.0};
        if (J.hi - J.lo < 1.0) continue;
        double est = holder_estimate(q, J, alpha, s);
        double C = est / holder_clean_shape(dc.rho, alpha, s, dc.ls_mu);
        worst = std::max(worst, C);
        per.push_back({{"lo", J.lo}, {"hi", J.hi}, {"estimate", est}, {"constant", C}});
      }
      record(k, {{"alpha", alpha}, {"rho", dc.rho}}, {{"intervals", per}, {"constant", worst}}, fmt(worst));
    } else if (k == "tail-fit") {
      json meas = json::array();
      bool all = true;
      for (Side sd : {Side::Left, Side::Right}) {
        TailFit f = fit_tail_decay(q, sd);
        od.write(sd == Side::Left ? "tail_fit_left.csv" : "tail_fit_right.csv", tail_fit_csv(f));
        json t = tail_json(f, spec.kernel.s);
        all = all && t["relative_error"].get<double>() <= 0.15;
        meas.push_back(t);
      }
      record(k, {{"tol", 0.15}}, meas, pf(all));
    } else if (k == "monotonicity") {
      double dfc = monotonicity_defect(q);
      record(k, json::object(), {{"defect", dfc}}, fmt(dfc));
    }
  }
  od.write("diagnostics.json", json{{"profile", profile}, {"checks", rep}}.dump(2) + "\n");
  od.finish(m);
  return ok ? kPass : kFail;
}

// ---------------------------------------------------------------- bench-appendix

int cmd_bench(const std::string& config, const std::string& out) {
  RunConfig c;
  if (!config.empty()) c = load_config(config);
  BenchReport r = run_appendix_bench(c.bench);
  OutDir od(out);
  RunManifest m{digest(c), "bench-appendix", {}, {}};
  json rep = json::array();
  for (std::size_t i = 0; i < r.tables.size(); ++i) {
    const ScalingTable& t = r.tables[i];
    std::string stem = t.family;
    for (char& ch : stem)
      if (!std::isalnum(static_cast<unsigned char>(ch))) ch = '_';
    od.write("bench_" + stem + ".csv", bench_csv(t));
    od.write("bench_" + stem + "_refined.csv", bench_csv(r.refined[i]));
    m.verdicts["ratios " + t.family] = pf(t.pass);
    rep.push_back({{"family", t.family},
                   {"expected_l2", t.expected_l2},
                   {"expected_hs", t.expected_hs},
                   {"tol", t.tol},
                   {"worst_l2", t.worst_l2},
                   {"worst_hs", t.worst_hs},
                   {"pass", t.pass}});
    std::cout << t.family << ": worst ratio error l2 " << fmt(t.worst_l2) << " hs " << fmt(t.worst_hs) << " -> "
              << pf(t.pass) << "\n";
  }
  m.verdicts["resolution_stability"] = pf(r.stable);
  od.write("bench_report.json",
           json{{"tables", rep}, {"worst_stability", r.worst_stability}, {"stable", r.stable}, {"pass", r.pass}}.dump(2) +
               "\n");
  od.finish(m);
  std::cout << "resolution stability " << fmt(r.worst_stability) << " -> " << pf(r.stable) << "\n";
  return r.pass ? kPass : kFail;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kEnv;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kUsage;
  } catch (const ResolutionError& e) {
    std::cerr << "resolution error: " << e.what() << "\n";
    return kFail;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kEnv;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nlhet: nonlocal heteroclinic solver"};
  app.require_subcommand(1);
  std::string config, out = "out", profile;
  bool resume = false;
  std::vector<std::string> checks;

  auto* vm = app.add_subcommand("verify-model", "check the structural hypotheses of a configured model");
  vm->add_option("config", config, "TOML config")->required();
  vm->add_option("--out", out, "output directory");

  auto* so = app.add_subcommand("solve", "run the continuation and write profile, trace and diagnostics");
  so->add_option("config", config, "TOML config")->required();
  so->add_option("--out", out, "output directory");
  so->add_flag("--resume", resume, "restart after the last completed stage");

  auto* dg = app.add_subcommand("diagnose", "run diagnostics on a dumped profile");
  dg->add_option("profile", profile, "profile CSV (x,Q,Qsharp,v)")->required();
  dg->add_option("config", config, "TOML config")->required();
  dg->add_option("--checks", checks, "comma separated: " + CLI::detail::join(kChecks, ","))->delimiter(',');
  dg->add_option("--out", out, "output directory");

  auto* be = app.add_subcommand("bench-appendix", "scaling checks of the bump and trace families");
  be->add_option("config", config, "TOML config (optional; [bench] section)");
  be->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*vm) return guarded([&] { return cmd_verify_model(config, out); });
  if (*so) return guarded([&] { return cmd_solve(config, out, resume); });
  if (*dg) return guarded([&] { return cmd_diagnose(profile, config, checks, out); });
  return guarded([&] { return cmd_bench(config, out); });
}
