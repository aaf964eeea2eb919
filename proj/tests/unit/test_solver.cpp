#include <doctest.h>

#include <cmath>
#include <random>

#include "nlhet/errors.hpp"
#include "nlhet/solver.hpp"

using namespace nlhet;

namespace {

ProblemSpec homogeneous() {
  ProblemSpec p;
  p.kernel.s = 0.5;
  p.kernel.c = 1.0 / kPi;
  return p;
}

Profile layer(const Grid& g, double shift = 0.0) {
  Profile q = Profile::sample(g, [shift](double x) { return explicit_layer(x - shift); }, 0.0, 2 * kPi);
  q.values.front() = 0.0;
  q.values.back() = 2 * kPi;
  return q;
}

double linf(const Profile& a, const Profile& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.values[i] - b.values[i]));
  return m;
}

ContinuationOptions short_schedule() {
  ContinuationOptions o;
  o.schedule.eta_seq = {1e-1, 1e-2};
  o.schedule.mu_seq = {0.1, 0.02};
  o.solver.keep_trace = true;
  return o;
}

}  // namespace

TEST_CASE("truncate_to_wells clamps node values") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::make(5.0, 11);
  Profile q = Profile::constant(g, 2 * kPi + 0.3);
  q.values[3] = -0.1;
  q.values[4] = 1.0;
  Profile t = truncate_to_wells(q, p.potential);
  CHECK(t.values[0] == 2 * kPi);
  CHECK(t.values[3] == 0.0);
  CHECK(t.values[4] == 1.0);
}

TEST_CASE("truncation never increases the energy") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(20.0, 0.1);
  Profile qs = make_reference(g, p.reference());
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N(0.0, 1.5);
  for (int t = 0; t < 20; ++t) {
    Profile q = qs;
    for (std::size_t i = 1; i + 1 < g.n; ++i) q.values[i] += N(rng);
    double eta = t % 2 ? 1e-2 : 0.0, mu = t % 3 ? 0.05 : 0.0;
    double e0 = total_energy(q, p, eta, mu, qs).total;
    double e1 = total_energy(truncate_to_wells(q, p.potential), p, eta, mu, qs).total;
    CHECK(e1 <= e0 + 1e-12 * std::fabs(e0));
  }
}

TEST_CASE("residual_EL: layer, equilibrium and reference") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(400.0, 0.02);
  Profile q = Profile::sample(g, explicit_layer, 0.0, 2 * kPi);
  CHECK(residual_EL(q, p, {-200.0, 200.0}).first <= 5e-3);

  Grid g2 = Grid::with_spacing(20.0, 0.05);
  CHECK(residual_EL(Profile::constant(g2, 2 * kPi), p).first <= 1e-12);
  CHECK(residual_EL(make_reference(g2, p.reference()), p).first > 0.1);
}

TEST_CASE("exact layer is a near-minimizer") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(200.0, 0.05);
  Profile q = layer(g);
  SolverConfig sc;
  double tol = sc.resolved_grad_tol(g.n);
  // stationary away from the pinned window edges already
  CHECK(residual_EL(q, p, {-100.0, 100.0}).first <= tol / g.h());
  SolveResult r = minimize_constrained(q, p, nullptr, make_obstacle_config(p, {}), 0.0, 0.0, sc, "layer");
  CHECK(r.converged);
  CHECK(r.iterations <= 25);
  CHECK(linf(r.profile, q) <= 0.01);
}

TEST_CASE("constrained minimization: monotone trace and complementarity") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(50.0, 0.05);
  ObstacleConfig cfg = make_obstacle_config(p, {});
  auto [phi, psi] = solve_barriers(p, cfg, g, 1e-2);
  ObstaclePair pair = build_envelopes(phi.u, psi.u, cfg);
  Profile q0 = project_admissible(make_reference(g, p.reference()), pair, cfg, ProjectionMode::GammaOnly);
  SolverConfig sc;
  SolveResult r = minimize_constrained(q0, p, &pair, cfg, 1e-2, 0.05, sc, "test");
  REQUIRE(r.converged);
  const auto& E = r.trace.front().energies;
  REQUIRE(E.size() >= 2);
  for (std::size_t i = 1; i < E.size(); ++i) CHECK(E[i] < E[i - 1]);

  double tol = sc.resolved_grad_tol(g.n);
  EnergyModel m(p, g);
  Field grad = m.gradient(r.profile, 1e-2, 0.05);
  std::vector<char> contact(g.n, 0);
  for (std::size_t i : r.contact.upper) {
    contact[i] = 1;
    CHECK(grad[i] <= tol);  // descent would push above Phi
  }
  for (std::size_t i : r.contact.lower) {
    contact[i] = 1;
    CHECK(grad[i] >= -tol);
  }
  for (std::size_t i = 1; i + 1 < g.n; ++i) {
    double v = r.profile.values[i];
    if (contact[i] || v <= p.potential.well_lo() || v >= p.potential.well_hi()) continue;
    CHECK(std::fabs(grad[i]) / g.h() <= tol / g.h());
  }
  // comparison with the barriers on (b1, b2)
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x <= cfg.b1 || x >= cfg.b2) continue;
    CHECK(r.profile.values[i] <= phi.u.values[i] + 1e-6);
    CHECK(r.profile.values[i] >= psi.u.values[i] - 1e-6);
  }
}

TEST_CASE("stagnation is reported, not hidden") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(20.0, 0.1);
  ObstacleConfig cfg = make_obstacle_config(p, {});
  SolverConfig sc;
  sc.energy_decrease_min = 1e6;
  CHECK_THROWS_AS(minimize_constrained(make_reference(g, p.reference()), p, nullptr, cfg, 1e-2, 0.05, sc),
                  StagnationError);
}

TEST_CASE("solver and schedule validation") {
  SolverConfig sc;
  sc.c1 = 0.6;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = {};
  sc.shrink = 1.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = {};
  sc.max_iters = 0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc = {};
  sc.grad_tol = -1.0;
  CHECK_THROWS_AS(sc.validate(), ConfigError);

  ContinuationSchedule s;
  s.eta_seq = {1e-1, 1e-2, 1e-3, 0.0};
  s.mu_seq = {0.1, 0.02, 0.005, 0.0};
  CHECK_NOTHROW(s.validate());
  CHECK(s.positive_eta().size() == 3);
  s.eta_seq = {1e-2, 1e-1};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.eta_seq = {1e-1, 0.0, 1e-2};
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.eta_seq = {1e-1};
  s.mu_seq = {0.0};
  CHECK_THROWS_AS(s.validate(), ConfigError);

  ProblemSpec p = homogeneous();
  Grid g = Grid::make(10.0, 101);
  CHECK_THROWS_AS(minimize_constrained(make_reference(g, p.reference()), p, nullptr, make_obstacle_config(p, {}), -1.0,
                                       0.0, SolverConfig{}),
                  DomainError);
}

TEST_CASE("continuation recovers the explicit layer") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(200.0, 0.05);
  ContinuationOptions o;
  int stages = 0;
  o.on_stage = [&](const StageRecord&, const Profile&) { ++stages; };
  SolveResult r = continuation_run(p, g, o);
  CHECK(stages == 3 * 4 + 1);
  CHECK(r.trace.size() == 13);
  CHECK(r.converged);
  CHECK(r.limit.pass());
  CHECK(r.residual_max <= 1e-2);
  double best = 1e9;
  for (double c = -0.5; c <= 0.5; c += 0.005) best = std::min(best, linf(r.profile, layer(g, c)));
  CHECK(best <= 0.05);
  for (const auto& st : r.trace)
    for (std::size_t i = 1; i < st.energies.size(); ++i) CHECK(st.energies[i] <= st.energies[i - 1]);
}

TEST_CASE("orientation invariance") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(40.0, 0.1);
  ContinuationOptions o = short_schedule();
  SolveResult a = continuation_run(p, g, o);
  CHECK_FALSE(a.flipped);
  SolveResult b = continuation_run(reflect(p), g, o);
  CHECK(b.flipped);
  double d = 0.0;
  for (std::size_t i = 0; i < g.n; ++i) d = std::max(d, std::fabs(-b.profile.values[i] - a.profile.values[i]));
  CHECK(d <= 1e-10);
}

TEST_CASE("translation invariance at mu = 0 with constant a") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(200.0, 0.05);
  Profile qs = make_reference(g, p.reference());
  double e0 = total_energy(layer(g), p, 0.0, 0.0, qs).total;
  for (double th : {0.5, 1.0, 2.0}) {
    double e1 = total_energy(layer(g, th), p, 0.0, 0.0, qs).total;
    CHECK(std::fabs(e1 - e0) <= 1e-5);
  }
}

TEST_CASE("mu guard is a warning only") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(40.0, 0.1);
  ContinuationOptions o = short_schedule();
  o.schedule.mu_seq = {0.9, 0.1};
  SolveResult r = continuation_run(p, g, o);
  bool warned = false;
  for (const auto& n : r.notes)
    if (n.find("exceeds the heuristic guard") != std::string::npos) warned = true;
  CHECK(warned);
}

TEST_CASE("a priori report on a constrained minimizer") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(50.0, 0.1);
  ObstacleConfig cfg = make_obstacle_config(p, {});
  auto [phi, psi] = solve_barriers(p, cfg, g, 1e-2);
  ObstaclePair pair = build_envelopes(phi.u, psi.u, cfg);
  Profile q0 = project_admissible(make_reference(g, p.reference()), pair, cfg, ProjectionMode::GammaOnly);
  std::vector<double> kappas;
  for (double mu : {0.1, 0.05, 0.02}) {
    SolveResult r = minimize_constrained(q0, p, &pair, cfg, 1e-2, mu, SolverConfig{});
    AprioriReport a = verify_apriori_bounds(r, p, 1e-2, mu);
    CHECK(a.well_sandwich);
    CHECK(a.linf_bound);
    CHECK_FALSE(a.flagged);
    CHECK(std::isfinite(a.kappa_k));
    kappas.push_back(a.kappa_k);
  }
  auto [lo, hi] = std::minmax_element(kappas.begin(), kappas.end());
  CHECK(*hi <= 10.0 * *lo);
}

TEST_CASE("resuming after a stage reproduces the full run") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(40.0, 0.1);
  ContinuationOptions o = short_schedule();
  CHECK(stage_count(o.schedule) == 2 * 3 + 1);
  std::vector<Profile> dumps;
  o.on_stage = [&](const StageRecord& st, const Profile& q) {
    CHECK(st.index == dumps.size());
    dumps.push_back(q);
  };
  SolveResult full = continuation_run(p, g, o);
  REQUIRE(dumps.size() == 7);
  for (std::size_t k : {1u, 4u, 6u}) {
    ContinuationOptions r = short_schedule();
    r.skip_stages = k;
    std::size_t first = 99;
    r.on_stage = [&](const StageRecord& st, const Profile&) { first = std::min(first, st.index); };
    SolveResult res = continuation_run(p, dumps[k - 1], r);
    CHECK(first == k);
    CHECK(res.trace.size() == 7 - k);
    CHECK(res.profile.values == full.profile.values);
  }
}
