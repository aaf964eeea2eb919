#include <doctest.h>

#include <cmath>
#include <random>

#include "nlhet/diagnostics.hpp"
#include "nlhet/errors.hpp"
#include "nlhet/solver.hpp"
#include "oracles.hpp"

using namespace nlhet;

namespace {

ProblemSpec homogeneous() {
  ProblemSpec p;
  p.kernel.s = 0.5;
  p.kernel.c = 1.0 / kPi;
  return p;
}

Profile layer(const Grid& g) { return Profile::sample(g, explicit_layer, 0.0, 2 * kPi); }

// blocks hugging a random well, with excursions
Profile random_profile(std::mt19937_64& rng, double rho) {
  std::uniform_int_distribution<std::size_t> N(5, 2000);
  std::uniform_real_distribution<double> R(2.0, 60.0), U(-1.0, 1.0);
  std::uniform_int_distribution<int> B(1, 400), W(0, 2);
  Grid g = Grid::make(R(rng), 2 * N(rng) + 1);
  Profile q = Profile::constant(g, 0.0);
  q.right_const = 1.0;
  std::size_t i = 0;
  while (i < g.n) {
    int len = B(rng), w = W(rng);
    double base = w == 2 ? 0.5 : double(w);
    double amp = U(rng) > 0.7 ? 1.6 * rho : 0.99 * rho;
    for (int k = 0; k < len && i < g.n; ++k, ++i) q.values[i] = base + amp * U(rng);
  }
  return q;
}

struct LSFixture {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(50.0, 0.05);
  ObstacleConfig cfg = make_obstacle_config(p, {});
  ObstaclePair pair;
  Profile q;
  LSFixture(double eta, double mu) {
    auto [phi, psi] = solve_barriers(p, cfg, g, eta);
    pair = build_envelopes(phi.u, psi.u, cfg);
    Profile q0 = project_admissible(make_reference(g, p.reference()), pair, cfg, ProjectionMode::GammaOnly);
    q = minimize_constrained(q0, p, &pair, cfg, eta, mu, SolverConfig{}).profile;
  }
};

}  // namespace

TEST_CASE("clean intervals of the explicit layer") {
  Grid g = Grid::with_spacing(200.0, 0.05);
  CleanIntervalReport r = find_clean_intervals(layer(g), 0.05, {0.0, 2 * kPi});
  REQUIRE(r.intervals.size() == 2);
  CHECK(r.min_length == doctest::Approx(std::fabs(std::log(0.05))));
  // 2 arctan(1/x) <= 0.05 exactly for |x| >= cot(0.025)
  double x0 = 1.0 / std::tan(0.025);
  const auto& L = r.intervals[0];
  const auto& Rt = r.intervals[1];
  CHECK(L.well == 0.0);
  CHECK(L.lo == doctest::Approx(-200.0));
  CHECK(std::fabs(L.hi + x0) <= g.h());
  CHECK(Rt.well == doctest::Approx(2 * kPi));
  CHECK(std::fabs(Rt.lo - x0) <= g.h());
  CHECK(Rt.hi == doctest::Approx(200.0));
  CHECK(Rt.sup_deviation <= 0.05);
  CHECK(r.clean_points.size() == 2);
  CHECK(r.clean_points[1] == doctest::Approx(Rt.center()));
}

TEST_CASE("clean intervals: constant profile and length gate") {
  Grid g = Grid::make(10.0, 201);
  CleanIntervalReport r = find_clean_intervals(Profile::constant(g, 0.0), 0.1, {0.0, 2 * kPi});
  REQUIRE(r.intervals.size() == 1);
  CHECK(r.intervals[0].lo == -10.0);
  CHECK(r.intervals[0].hi == 10.0);
  CHECK(r.intervals[0].sup_deviation == 0.0);

  // the ramp stays within 0.4 of 0 only on a run shorter than |log 0.4|
  Profile qs = make_reference(g, {0.0, 1.0});
  CleanIntervalReport s = find_clean_intervals(qs, 0.4, {0.0, 1.0}, {-0.5, 0.5});
  CHECK(s.intervals.empty());
  CleanIntervalReport t = find_clean_intervals(qs, 0.4, {0.0, 1.0});
  for (const auto& c : t.intervals) CHECK(c.hi - c.lo >= t.min_length);
}

TEST_CASE("clean intervals: guards") {
  Grid g = Grid::make(10.0, 201);
  Profile q = Profile::constant(g, 0.0);
  CHECK_THROWS_AS(find_clean_intervals(q, 1.0, {0.0}), PreconditionError);
  CHECK_THROWS_AS(find_clean_intervals(q, 0.0, {0.0}), PreconditionError);
  CHECK_THROWS_AS(find_clean_intervals(q, 0.1, {0.0}, {-20.0, 0.0}), DomainError);
}

TEST_CASE("clean-interval scan agrees with brute force") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> Rho(0.01, 0.5);
  for (int t = 0; t < 50; ++t) {
    double rho = Rho(rng);
    Profile q = random_profile(rng, rho);
    std::vector<double> wells{0.0, 1.0};
    CleanIntervalReport r = find_clean_intervals(q, rho, wells);
    auto brute = oracle::clean_runs_brute(q.values, q.grid.h(), rho, wells, std::fabs(std::log(rho)));
    REQUIRE(r.intervals.size() == brute.size());
    for (std::size_t k = 0; k < brute.size(); ++k) {
      CHECK(r.intervals[k].first == brute[k].first);
      CHECK(r.intervals[k].last == brute[k].last);
      CHECK(r.intervals[k].well == brute[k].well);
    }
  }
}

TEST_CASE("stickiness on the layer tail") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(200.0, 0.05);
  Profile q = layer(g);
  StickinessReport s = stickiness_check(q, 150.0, 190.0, p, 0.0, 0.0, 0.015, 0.5);
  CHECK(s.pass);
  CHECK(s.well == doctest::Approx(2 * kPi));
  CHECK(s.sup_dev <= 0.25);
  CHECK(s.localized_energy <= 1e-2);
  CHECK(s.viscous == 0.0);
  CHECK(s.potential >= 0.0);
  Interval I{150.0 - 0.5 * g.h(), 190.0 + 0.5 * g.h()};
  CHECK(s.interaction == doctest::Approx(0.25 * seminorm_sq(q, I, I, p.kernel)).epsilon(1e-12));

  // spurious bump of height r between the two clean points
  Profile b = q;
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (std::fabs(x - 170.0) < 1.0) b.values[i] += 0.5 * (1.0 - std::fabs(x - 170.0));
  }
  StickinessReport f = stickiness_check(b, 150.0, 190.0, p, 0.0, 0.0, 0.015, 0.5);
  CHECK_FALSE(f.pass);
  CHECK(f.sup_dev > 0.25);

  CHECK_THROWS_AS(stickiness_check(q, 150.0, 153.0, p, 0.0, 0.0, 0.015, 0.5), PreconditionError);
  CHECK_THROWS_AS(stickiness_check(q, 0.0, 150.0, p, 0.0, 0.0, 0.015, 0.5), PreconditionError);
}

TEST_CASE("Lewy-Stampacchia on constrained minimizers") {
  for (double eta : {1e-1, 1e-2}) {
    LSFixture f(eta, 0.05);
    for (Interval I : {Interval{-40.0, -10.0}, Interval{-3.0, 3.0}, Interval{-0.8, 0.8}, Interval{-1.5, -0.5},
                       Interval{0.5, 1.5}, Interval{10.0, 40.0}}) {
      LSReport r = lewy_stampacchia_check(f.q, f.pair, f.p, eta, 0.05, I);
      CHECK_MESSAGE(r.pass, "eta ", eta, " interval [", I.lo, ", ", I.hi, "] violation ", r.worst_violation);
    }
  }
}

TEST_CASE("Lewy-Stampacchia: obstacle itself and noise witness") {
  LSFixture f(1e-1, 0.05);
  // Q = Phi: the lower side holds by construction
  LSReport r = lewy_stampacchia_check(f.pair.Phi, f.pair, f.p, 1e-1, 0.05, {-0.8, 0.8});
  CHECK(r.value_min >= r.lower - r.slack);

  Profile noisy = f.q;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 0.3);
  for (std::size_t i = 1; i + 1 < noisy.size(); ++i) noisy.values[i] += N(rng);
  CHECK_FALSE(lewy_stampacchia_check(noisy, f.pair, f.p, 1e-1, 0.05, {10.0, 40.0}).pass);
  CHECK_FALSE(lewy_stampacchia_check(noisy, f.pair, f.p, 1e-1, 0.05, {-40.0, -10.0}).pass);
}

TEST_CASE("Holder estimate") {
  Grid g = Grid::with_spacing(10.0, 0.01);
  CHECK(holder_estimate(Profile::constant(g, 1.0), {-1.0, 1.0}, 0.5, 0.5) == 0.0);
  double coarse = holder_estimate(layer(g), {-1.0, 1.0}, 0.9, 0.5);
  Grid g2 = Grid::with_spacing(10.0, 0.005);
  double fine = holder_estimate(layer(g2), {-1.0, 1.0}, 0.9, 0.5);
  CHECK(std::isfinite(fine));
  CHECK(fine == doctest::Approx(coarse).epsilon(0.05));
  // more pairs never lower the sup
  CHECK(holder_estimate(layer(g), {-0.5, 0.5}, 0.9, 0.5) <= coarse);
  CHECK_THROWS_AS(holder_estimate(layer(g), {-1.0, 1.0}, 1.0, 0.5), PreconditionError);
  CHECK(holder_clean_shape(0.05, 0.5, 0.5, 0.0) > 0.0);
}

TEST_CASE("glue_profile") {
  Grid g = Grid::with_spacing(100.0, 0.05);
  Profile q = layer(g);
  double rho = 0.05;
  double x0 = 1.0 / std::tan(0.5 * rho) + 5.0;
  Profile p = glue_profile(q, x0, 2 * kPi, 2.0);
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x < x0 - g.h()) CHECK(p.values[i] == q.values[i]);
    if (x >= x0) CHECK(std::fabs(p.values[i] - 2 * kPi) <= 2 * rho);
    if (x >= x0 + 1.0 + g.h()) CHECK(p.values[i] == 2 * kPi);
  }
  CHECK(p.right_const == 2 * kPi);
  CHECK(holder_estimate(p, {x0, x0 + 2.0}, 0.5, 0.5) <= rho);

  Profile flat = Profile::sample(g, [](double x) { return x < 0 ? 0.0 : 2 * kPi; }, 0.0, 2 * kPi);
  Profile same = glue_profile(flat, 10.0, 2 * kPi, 1.0);
  CHECK(same.values == flat.values);

  CHECK_THROWS_AS(glue_profile(q, 10.0, 2 * kPi, 0.5), PreconditionError);
  CHECK_THROWS_AS(glue_profile(q, 99.5, 2 * kPi, 1.0), DomainError);
}

TEST_CASE("gluing energy defect") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::with_spacing(50.0, 0.05);
  Profile c = Profile::constant(g, 1.0);
  CHECK(gluing_energy_defect(c, c, c, 0.0, 1.0, -10.0, 10.0, p.kernel) == 0.0);

  Profile q = layer(g);
  Profile qs = make_reference(g, p.reference());
  // an O(1) jump at a non-clean point
  Profile jump = glue_profile(q, 0.0, 2 * kPi, 1.0);
  for (std::size_t i = 0; i < g.n; ++i)
    if (g.x(std::int64_t(i)) > 0.0) jump.values[i] = 2 * kPi;
  CHECK(gluing_energy_defect(q, jump, qs, 0.0, 1.0, -10.0, 10.0, p.kernel) > 1.0);
}

TEST_CASE("tail decay fit") {
  Grid g = Grid::with_spacing(200.0, 0.05);
  TailFit f = fit_tail_decay(layer(g), Side::Right);
  CHECK(f.fitted_exponent == doctest::Approx(-1.0).epsilon(0.1));
  CHECK(f.fitted_constant == doctest::Approx(2.0).epsilon(0.05));
  CHECK(f.r_squared > 0.99);
  CHECK(f.x.front() >= 100.0);
  CHECK(f.x.back() <= 200.0 - 5.0 * g.h() + 1e-9);
  TailFit l = fit_tail_decay(layer(g), Side::Left);
  CHECK(l.fitted_exponent == doctest::Approx(-1.0).epsilon(0.1));

  Profile q = layer(g);
  for (std::size_t i = 0; i < g.n; ++i)
    if (g.x(std::int64_t(i)) > 50.0) q.values[i] = 2 * kPi;
  CHECK_THROWS_AS(fit_tail_decay(q, Side::Right), DegenerateFitError);
}

TEST_CASE("monotonicity defect and tail envelope") {
  Grid g = Grid::with_spacing(50.0, 0.05);
  Profile q = layer(g);
  CHECK(monotonicity_defect(q) == 0.0);
  Profile d = q;
  d.values[g.n / 2] -= 0.3;
  CHECK(monotonicity_defect(d) == doctest::Approx(0.3 - (q.values[g.n / 2] - q.values[g.n / 2 - 1])));
  q.values.back() = 2 * kPi;
  auto env = tail_envelope(q, Side::Right);
  for (std::size_t i = 1; i < env.size(); ++i) CHECK(env[i] <= env[i - 1] + 1e-9);
  CHECK(env.back() == 0.0);
}
