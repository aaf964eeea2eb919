#include "nlhet/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlhet/errors.hpp"

namespace nlhet {

namespace {

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

double sup_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

Profile negate(const Profile& q) {
  Profile r = q;
  for (double& v : r.values) v = -v;
  r.left_const = -q.left_const;
  r.right_const = -q.right_const;
  return r;
}

std::vector<double> positive_part(const std::vector<double>& seq, const char* name) {
  std::vector<double> out;
  for (std::size_t k = 0; k < seq.size(); ++k) {
    double v = seq[k];
    if (v == 0.0 && k + 1 == seq.size()) break;
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " entries must be positive (a single trailing 0 is allowed)");
    if (!out.empty() && !(v < out.back())) throw ConfigError(std::string(name) + " must be strictly decreasing");
    out.push_back(v);
  }
  return out;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iters < 1) throw ConfigError("solver.max_iters must be >= 1");
  if (!std::isnan(grad_tol) && !(grad_tol > 0.0)) throw ConfigError("solver.grad_tol must be positive");
  if (step_rule == StepRule::BacktrackingArmijo) {
    if (!(c1 > 0.0 && c1 <= 0.5)) throw ConfigError("Armijo c1 must lie in (0, 1/2]");
    if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("Armijo shrink must lie in (0, 1)");
  } else if (!(fixed_step > 0.0)) {
    throw ConfigError("fixed step must be positive");
  }
  if (!(energy_decrease_min >= 0.0)) throw ConfigError("solver.energy_decrease_min must be >= 0");
  if (refresh_every < 1) throw ConfigError("solver.refresh_every must be >= 1");
}

std::size_t stage_count(const ContinuationSchedule& s) {
  return s.positive_mu().size() * (s.positive_eta().size() + 1) + 1;
}

std::vector<double> ContinuationSchedule::positive_eta() const { return positive_part(eta_seq, "continuation.eta_seq"); }
std::vector<double> ContinuationSchedule::positive_mu() const { return positive_part(mu_seq, "continuation.mu_seq"); }

void ContinuationSchedule::validate() const {
  positive_eta();
  if (positive_mu().empty()) throw ConfigError("continuation.mu_seq needs at least one positive entry");
}

Profile truncate_to_wells(const Profile& q, const PotentialSpec& p) {
  Profile r = q;
  double lo = p.well_lo(), hi = p.well_hi();
  for (double& v : r.values) v = std::clamp(v, lo, hi);
  return r;
}

SolveResult minimize_constrained(const Profile& q0, const ProblemSpec& spec, const ObstaclePair* pair,
                                 const ObstacleConfig& cfg, double eta, double mu, const SolverConfig& sc,
                                 const std::string& label) {
  sc.validate();
  if (!(eta >= 0.0) || !(mu >= 0.0)) throw DomainError("minimize_constrained: eta and mu must be nonnegative");
  const Grid& g = q0.grid;
  const std::size_t n = g.n;
  const double h = g.h();
  const double tol = sc.resolved_grad_tol(n);
  const PotentialSpec& pot = spec.potential;

  Profile qs = make_reference(g, spec.reference());
  EnergyModel model(spec, g, qs);
  const auto& a = model.a();
  const auto& w = model.quad_weights();

  // box bounds; boundary nodes stay pinned
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    lo[i] = pot.well_lo();
    hi[i] = pot.well_hi();
    if (pair && constrained_node(cfg, g.x(std::int64_t(i)))) {
      lo[i] = std::max(lo[i], pair->Psi.values[i]);
      hi[i] = std::min(hi[i], pair->Phi.values[i]);
    }
    if (lo[i] > hi[i]) throw InvalidPairError("empty admissible band at node " + std::to_string(i));
  }
  Profile q = q0;
  for (std::size_t i = 1; i + 1 < n; ++i) q.values[i] = std::clamp(q.values[i], lo[i], hi[i]);

  Field L = model.nonlocal(q);
  EnergyBreakdown e0 = model.energy(q, L, eta, mu);
  double E = e0.total;
  Field grad = model.gradient(q, L, eta, mu);

  auto proj_norm = [&](const Field& gr) {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) m = std::max(m, std::fabs(q.values[i] - std::clamp(q.values[i] - gr[i], lo[i], hi[i])));
    return m;
  };

  // diagonal Hessian bound fixes the first trial step
  double curv = potential_curvature_bound(pot), amax = 0.0, dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) amax = std::max(amax, std::fabs(a[i])), dmax = std::max(dmax, model.op().diag(i));
  const double alpha0 = 1.0 / (4.0 * eta / h + h * (2.0 * dmax + mu + amax * curv));

  SolveResult res;
  StageRecord st;
  st.label = label;
  st.eta = eta;
  st.mu = mu;
  st.obstacles = pair != nullptr;
  st.energy_start = E;
  EnergyBreakdown parts = e0;
  auto record = [&](int k, double gn) {
    if (!sc.keep_trace) return;
    st.energies.push_back(E);
    st.points.push_back({k, parts, gn});
  };

  Field d(n, 0.0), Ld(n, 0.0), gnew(n, 0.0);
  double alpha = alpha0;
  double pg = proj_norm(grad);
  record(0, pg);
  int it = 0;
  bool converged = pg <= tol;
  while (!converged && it < sc.max_iters) {
    double trial = sc.step_rule == StepRule::FixedStep ? sc.fixed_step : alpha;
    bool accepted = false;
    double dE = 0.0, vis_last = 0.0, pen_last = 0.0, pt_last = 0.0, in_last = 0.0;
    for (int bt = 0; bt < 80; ++bt) {
      double gd = 0.0, dmaxabs = 0.0;
      for (std::size_t i = 1; i + 1 < n; ++i) {
        d[i] = std::clamp(q.values[i] - trial * grad[i], lo[i], hi[i]) - q.values[i];
        gd += grad[i] * d[i];
        dmaxabs = std::max(dmaxabs, std::fabs(d[i]));
      }
      if (dmaxabs == 0.0) break;
      model.op().apply_zero_far(d.data(), Ld.data());
      // E(q + d) - E(q) term by term
      double vis = 0.0, pen = 0.0, pt = 0.0, in = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        double dq = q.values[i + 1] - q.values[i], dd = d[i + 1] - d[i];
        vis += dd * (2.0 * dq + dd);
      }
      for (std::size_t i = 1; i + 1 < n; ++i) {
        if (d[i] == 0.0) continue;
        double vi = q.values[i] - qs.values[i];
        pen += w[i] * d[i] * (2.0 * vi + d[i]);
        pt += w[i] * a[i] * potential_delta(pot, q.values[i], d[i]);
        in += d[i] * (2.0 * L[i] + Ld[i]);
      }
      dE = 0.5 * eta * vis / h + 0.5 * mu * pen + pt + 0.5 * h * in;
      vis_last = vis, pen_last = pen, pt_last = pt, in_last = in;
      bool ok = sc.step_rule == StepRule::FixedStep ? dE < 0.0 : dE <= sc.c1 * gd;
      if (ok && -dE >= sc.energy_decrease_min && dE < 0.0) {
        accepted = true;
        break;
      }
      if (sc.step_rule == StepRule::FixedStep) break;
      trial *= sc.shrink;
    }
    if (!accepted) {
      if (pg <= 10.0 * tol) break;  // round-off floor just above the tolerance
      throw StagnationError("no admissible descent step in " + label + " (projected gradient " + num(pg) + ", energy " +
                                num(E) + ")",
                            pg, trial, E);
    }
    if (dE > 1e-12) throw MonotonicityError("energy increased by " + num(dE) + " in " + label);
    for (std::size_t i = 1; i + 1 < n; ++i) q.values[i] += d[i];
    E += dE;
    parts.viscous += 0.5 * eta * vis_last / h;
    parts.penalty += 0.5 * mu * pen_last;
    parts.potential += pt_last;
    parts.interaction += 0.5 * h * in_last;
    parts.total = E;
    ++it;
    if (it % sc.refresh_every == 0) {
      L = model.nonlocal(q);
    } else {
      for (std::size_t i = 0; i < n; ++i) L[i] += Ld[i];
    }
    gnew = model.gradient(q, L, eta, mu);
    // Barzilai-Borwein trial step for the next iteration
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      ss += d[i] * d[i];
      sy += d[i] * (gnew[i] - grad[i]);
    }
    alpha = sy > 0.0 ? ss / sy : 1e3 * alpha0;
    alpha = std::clamp(alpha, 1e-2 * alpha0, 1e8 * alpha0);
    grad.swap(gnew);
    pg = proj_norm(grad);
    record(it, pg);
    converged = pg <= tol;
  }

  L = model.nonlocal(q);
  res.breakdown = model.energy(q, L, eta, mu);
  if (res.breakdown.total > e0.total + 1e-12 * (1.0 + std::fabs(e0.total)))
    throw MonotonicityError("final energy exceeds the starting energy in " + label);
  grad = model.gradient(q, L, eta, mu);
  res.grad_norm = proj_norm(grad);
  res.converged = res.grad_norm <= tol;
  res.iterations = it;
  res.profile = q;
  res.residual_max = residual_EL(q, spec).first;
  if (pair) res.contact = contact_report(q, *pair, cfg);
  st.iterations = it;
  st.energy_end = E;
  st.grad_norm = res.grad_norm;
  st.converged = res.converged;
  st.contacts = res.contact.count();
  res.trace.push_back(std::move(st));
  return res;
}

ContactReport contact_report(const Profile& q, const ObstaclePair& pair, const ObstacleConfig& cfg, double tol) {
  ContactReport c;
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    if (!constrained_node(cfg, q.grid.x(std::int64_t(i)))) continue;
    if (std::fabs(q.values[i] - pair.Phi.values[i]) <= tol) c.upper.push_back(i);
    if (std::fabs(q.values[i] - pair.Psi.values[i]) <= tol) c.lower.push_back(i);
  }
  return c;
}

std::pair<double, Field> residual_EL(const Profile& q, const ProblemSpec& spec, const Interval& obs) {
  Field r = apply_full_operator(q, spec, 0.0, 0.0, q);
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < q.size(); ++i) {
    double x = q.grid.x(std::int64_t(i));
    if (x >= obs.lo && x <= obs.hi) m = std::max(m, std::fabs(r[i]));
  }
  return {m, r};
}

LimitCheck far_field_limit_check(const Profile& q, const ProblemSpec& spec) {
  const Grid& g = q.grid;
  const double s = spec.kernel.s, R = g.R;
  LimitCheck c;
  c.tol = 10.0 * std::pow(g.h(), std::min(2.0 * s, 1.0)) + 5.0 / std::pow(R, 2.0 * s);
  double z1 = spec.potential.zeta1, z2 = spec.potential.zeta2;
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x <= -0.5 * R) {
      double dv = std::fabs(q.values[i] - z1);
      c.left_dev = std::max(c.left_dev, dv);
      double& part = x <= -0.75 * R ? c.left_outer : c.left_inner;
      part = std::max(part, dv);
    }
    if (x >= 0.5 * R) {
      double dv = std::fabs(q.values[i] - z2);
      c.right_dev = std::max(c.right_dev, dv);
      double& part = x >= 0.75 * R ? c.right_outer : c.right_inner;
      part = std::max(part, dv);
    }
  }
  c.left_pass = c.left_dev <= c.tol && c.left_outer <= c.left_inner + 1e-12;
  c.right_pass = c.right_dev <= c.tol && c.right_outer <= c.right_inner + 1e-12;
  return c;
}

SolveResult continuation_run(const ProblemSpec& spec, const Grid& grid, const ContinuationOptions& opt) {
  return continuation_run(spec, make_reference(grid, spec.reference()), opt);
}

SolveResult continuation_run(const ProblemSpec& spec0, const Profile& q0, const ContinuationOptions& opt) {
  opt.schedule.validate();
  opt.solver.validate();
  const bool flip = spec0.potential.zeta1 > spec0.potential.zeta2;
  const ProblemSpec spec = flip ? reflect(spec0) : spec0;
  const Grid& grid = q0.grid;
  std::vector<std::string> notes;
  ObstacleConfig cfg = make_obstacle_config(spec, opt.obstacles, &notes);
  auto mus = opt.schedule.positive_mu();
  auto etas = opt.schedule.positive_eta();
  etas.push_back(0.0);
  if (mus.front() > 0.1) notes.push_back("first mu " + num(mus.front()) + " exceeds the heuristic guard 0.1");

  Profile qs = make_reference(grid, spec.reference());
  Profile q = flip ? negate(q0) : q0;
  SolveResult out;
  ContactReport last_contact;
  bool band_noted = false;
  std::size_t index = 0;
  auto push = [&](StageRecord&& st, const Profile& p) {
    st.index = index++;
    if (opt.on_stage) opt.on_stage(st, flip ? negate(p) : p);
    out.trace.push_back(std::move(st));
  };

  for (double mu : mus) {
    for (double eta : etas) {
      if (index < opt.skip_stages) {
        ++index;
        continue;
      }
      auto [phi, psi] = solve_barriers(spec, cfg, grid, eta);
      BandReport band = check_barrier_band(phi.u, psi.u, cfg);
      if (!band.pass && !band_noted) {
        notes.push_back("barrier band check failed: deviation " +
                        num(std::max({band.phi_left, band.phi_right, band.psi_left, band.psi_right})) + " > r/4 = " +
                        num(band.limit) + " (tau " + num(cfg.tau) + ")");
        band_noted = true;
      }
      ObstaclePair pair = build_envelopes(phi.u, psi.u, cfg);
      Profile start = opt.schedule.warm_start ? q : qs;
      start = project_admissible(truncate_to_wells(start, spec.potential), pair, cfg, ProjectionMode::GammaOnly);
      std::string label = "mu=" + num(mu) + " eta=" + num(eta);
      SolveResult r = minimize_constrained(start, spec, &pair, cfg, eta, mu, opt.solver, label);
      q = r.profile;
      // comparison with the barriers on (b1, b2)
      for (std::size_t i = 0; i < grid.n; ++i) {
        double x = grid.x(std::int64_t(i));
        if (x <= cfg.b1 || x >= cfg.b2) continue;
        if (q.values[i] > phi.u.values[i] + 1e-6 || q.values[i] < psi.u.values[i] - 1e-6)
          throw ConvergenceError("minimizer leaves [psi, phi] at x = " + num(x) + " in " + label, label, {x},
                                 {q.values[i] - phi.u.values[i]});
      }
      if (!r.converged) notes.push_back(label + ": stopped at max_iters with projected gradient " + num(r.grad_norm));
      StageRecord st = std::move(r.trace.front());
      st.band = band;
      last_contact = r.contact;
      out.iterations += r.iterations;
      push(std::move(st), q);
    }
  }

  SolveResult fin = minimize_constrained(q, spec, nullptr, cfg, 0.0, 0.0, opt.solver, "mu=0 eta=0");
  if (!fin.converged) notes.push_back("final stage: stopped at max_iters with projected gradient " + num(fin.grad_norm));
  out.iterations += fin.iterations;
  push(std::move(fin.trace.front()), fin.profile);
  out.profile = fin.profile;
  out.breakdown = fin.breakdown;
  out.residual_max = fin.residual_max;
  out.grad_norm = fin.grad_norm;
  out.converged = fin.converged;
  out.contact = last_contact;
  out.limit = far_field_limit_check(out.profile, spec);
  out.notes = notes;
  if (flip) {
    out.profile = negate(out.profile);
    out.flipped = true;
  }
  if (!out.limit.pass()) {
    std::vector<double> tx, td;
    const Profile& p = out.profile;
    for (std::size_t i = 0; i < grid.n; i += std::max<std::size_t>(1, grid.n / 64)) {
      double x = grid.x(std::int64_t(i));
      if (std::fabs(x) < 0.5 * grid.R) continue;
      tx.push_back(x);
      td.push_back(p.values[i] - (x < 0 ? spec0.potential.zeta1 : spec0.potential.zeta2));
    }
    throw ConvergenceError("far-field limit check failed (left " + num(out.limit.left_dev) + ", right " +
                               num(out.limit.right_dev) + ", tol " + num(out.limit.tol) + ")",
                           "limit", tx, td);
  }
  return out;
}

AprioriReport verify_apriori_bounds(const SolveResult& r, const ProblemSpec& spec, double eta, double mu) {
  const Profile& q = r.profile;
  const Grid& g = q.grid;
  const double h = g.h();
  Profile qs = make_reference(g, spec.reference());
  Profile v = difference(q, qs);
  AprioriReport a;
  double h1 = v.values.front() * v.values.front() + v.values.back() * v.values.back();
  for (std::size_t i = 0; i + 1 < g.n; ++i) h1 += (v.values[i + 1] - v.values[i]) * (v.values[i + 1] - v.values[i]);
  a.h1 = std::sqrt(h1 / h);
  a.k_seminorm = std::sqrt(seminorm_sq(v, Interval::line(), Interval::line(), spec.kernel));
  a.linf = sup_abs(v.values);
  EnergyModel m(spec, g, qs);
  double l2 = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) l2 += m.quad_weights()[i] * v.values[i] * v.values[i];
  a.l2 = std::sqrt(l2);
  a.energy_plane = 4.0 * m.energy(q, 0.0, 0.0).interaction;
  if (eta > 0.0 && mu > 0.0) a.kappa_h1 = a.h1 * std::sqrt(eta * mu);
  if (mu > 0.0) {
    a.kappa_k = a.k_seminorm * std::sqrt(mu);
    a.kappa_l2 = a.l2 * mu;
    a.kappa_energy = std::max(0.0, -a.energy_plane) * mu * mu;
  }
  a.kappa_linf = a.linf;
  a.well_sandwich = true;
  for (double x : q.values)
    if (x < spec.potential.well_lo() || x > spec.potential.well_hi()) a.well_sandwich = false;
  double sep = std::fabs(spec.potential.zeta2 - spec.potential.zeta1);
  a.linf_bound = a.linf <= 2.0 * sep + 1e-12;
  for (double k : {a.kappa_h1, a.kappa_k, a.kappa_linf, a.kappa_l2, a.kappa_energy})
    if (!std::isnan(k) && k > 1e6) a.flagged = true;
  return a;
}

}  // namespace nlhet
