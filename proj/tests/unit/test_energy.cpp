#include <doctest.h>

#include <cmath>
#include <random>

#include "nlhet/energy.hpp"
#include "nlhet/errors.hpp"
#include "oracles.hpp"

using namespace nlhet;

namespace {

ProblemSpec homogeneous(double s = 0.5) {
  ProblemSpec p;
  p.kernel.s = s;
  if (s == 0.5) p.kernel.c = 1.0 / kPi;
  p.modulation.value = 1.0;
  return p;
}

ProblemSpec modulated() {
  ProblemSpec p = homogeneous();
  p.modulation.form = ModulationForm::CosinePerturbation;
  p.modulation.base = 2.0;
  p.modulation.eps = 0.5;
  p.modulation.delta_freq = 0.5;
  return p;
}

// Q# plus a smooth random perturbation vanishing at the window edges
Profile perturbed(const Grid& g, const ReferenceProfile& ref, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> U(-1, 1);
  double a1 = amp * U(rng), a2 = amp * U(rng), c = 3 * U(rng), w = 1.5 + U(rng);
  return Profile::sample(
      g,
      [&](double x) {
        double z = (x - c) / (3 * w);
        double bump = std::fabs(z) < 1 ? std::pow(1 - z * z, 2) : 0.0;
        return ref.eval(x) + bump * (a1 * std::sin(2 * x) + a2);
      },
      ref.zeta1, ref.zeta2);
}

}  // namespace

TEST_CASE("renormalized interaction vanishes at Q# and is symmetric") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::make(20.0, 801);
  Profile qs = make_reference(g, p.reference());
  Interval I{-3, 1}, J{-0.5, 25};
  CHECK(renormalized_interaction(qs, qs, p.kernel, I, J) == 0.0);
  CHECK(renormalized_interaction(qs, qs, p.kernel, Interval::line(), Interval::line()) == 0.0);
  Profile q = Profile::sample(g, explicit_layer, 0.0, 2 * kPi);
  double ij = renormalized_interaction(q, qs, p.kernel, I, J), ji = renormalized_interaction(q, qs, p.kernel, J, I);
  CHECK(ij == doctest::Approx(ji).epsilon(1e-12));
  Profile bad = q;
  bad.right_const = 1.0;
  CHECK_THROWS_AS(renormalized_interaction(bad, qs, p.kernel, I, J), DomainError);
}

TEST_CASE("fast interaction equals the double sum over the plane") {
  ProblemSpec p = modulated();
  Grid g = Grid::make(15.0, 601);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 3; ++t) {
    Profile qs = make_reference(g, p.reference());
    Profile q = perturbed(g, p.reference(), rng, 1.0);
    EnergyModel m(p, g, qs);
    double fast = m.energy(q, 0.0, 0.0).interaction;
    double slow = 0.25 * renormalized_interaction(q, qs, p.kernel, Interval::line(), Interval::line());
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}

TEST_CASE("renormalized interaction of the layer is stable under window doubling") {
  ProblemSpec p = homogeneous();
  double prev = 0;
  for (double R : {200.0, 400.0}) {
    Grid g = Grid::with_spacing(R, 0.05);
    Profile q = Profile::sample(g, explicit_layer, 0.0, 2 * kPi);
    EnergyModel m(p, g);
    double E = 4 * m.energy(q, 0, 0).interaction;
    MESSAGE("R=" << R << " E=" << E);
    if (R > 200) CHECK(std::fabs(E - prev) <= 0.02 * std::fabs(prev));
    prev = E;
  }
}

TEST_CASE("raw seminorm diverges, renormalized energy converges") {
  // s = 1/2: [Q]^2 over [-r, r]^2 grows like 2 c D^2 log r
  {
    ProblemSpec p = homogeneous();
    Grid g = Grid::with_spacing(400.0, 0.1);
    Profile q = Profile::sample(g, explicit_layer, 0.0, 2 * kPi);
    Profile qs = make_reference(g, p.reference());
    LatticeKernel lat(p.kernel, g.h(), g.n, TailClosure::AnalyticPower);
    std::vector<double> lr, raw, ren;
    for (double r : {25.0, 50.0, 100.0, 200.0}) {
      Interval X{-r, r};
      lr.push_back(std::log(r));
      raw.push_back(bilinear_form(q, q, X, X, lat));
      ren.push_back(renormalized_interaction(q, qs, lat, X, X));
      MESSAGE("r=" << r << " raw " << raw.back() << " ren " << ren.back());
    }
    double D = 2 * kPi, norm = 2 * (1 / kPi) * D * D;
    for (std::size_t k = 0; k + 1 < lr.size(); ++k) {
      double slope = (raw[k + 1] - raw[k]) / (lr[k + 1] - lr[k]) / norm;
      MESSAGE("normalized log slope " << slope);
      CHECK(std::fabs(slope - 1.0) <= 0.2);
    }
    // truncating the profile to [-r, r] (far fields outside) gives a Cauchy sequence in r
    std::vector<double> Er;
    for (double r : {50.0, 100.0, 200.0, 400.0}) {
      Profile qr = restrict_window(q, r);
      EnergyModel m(p, qr.grid);
      Er.push_back(4 * m.energy(qr, 0, 0).interaction);
      MESSAGE("window " << r << " E " << Er.back());
    }
    for (std::size_t k = 1; k + 1 < Er.size(); ++k) CHECK(std::fabs(Er[k + 1] - Er[k]) <= 0.02 * std::fabs(Er[k]));
  }
  // s < 1/2: increments grow like r^{1-2s}
  {
    double s = 0.35;
    ProblemSpec p = homogeneous(s);
    Grid g = Grid::with_spacing(400.0, 0.1);
    Profile qs = make_reference(g, p.reference());
    LatticeKernel lat(p.kernel, g.h(), g.n, TailClosure::AnalyticPower);
    std::vector<double> raw;
    std::vector<double> rs{12.5, 25.0, 50.0, 100.0, 200.0};
    for (double r : rs) raw.push_back(bilinear_form(qs, qs, Interval{-r, r}, Interval{-r, r}, lat));
    for (std::size_t k = 0; k + 2 < raw.size(); ++k) {
      double slope = std::log((raw[k + 2] - raw[k + 1]) / (raw[k + 1] - raw[k])) / std::log(2.0);
      MESSAGE("power growth exponent " << slope);
      CHECK(std::fabs(slope - (1 - 2 * s)) <= 0.2 * (1 - 2 * s));
    }
  }
}

TEST_CASE("total energy at Q# and at a well") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::make(10.0, 2001);
  Profile qs = make_reference(g, p.reference());
  EnergyBreakdown e = total_energy(qs, p, 1.0, 1.0, qs);
  // (1/2) int |Q#'|^2 = (5/14)(zeta2 - zeta1)^2 for the quintic ramp
  double exact = 5.0 / 14.0 * 4 * kPi * kPi;
  double quad = 0.5 * oracle::gk([&](double x) { double d = p.reference().derivative(x); return d * d; }, -1, 1);
  CHECK(quad == doctest::Approx(exact).epsilon(1e-12));
  CHECK(e.viscous == doctest::Approx(exact).epsilon(1e-4));
  CHECK(e.penalty == 0.0);
  CHECK(e.interaction == 0.0);
  CHECK(e.total == doctest::Approx(e.viscous + e.penalty + e.potential + e.interaction).epsilon(1e-12));

  Profile z = Profile::constant(g, 0.0);
  ProblemSpec pz = p;
  pz.potential.zeta2 = 2 * kPi;
  Profile zs = Profile::constant(g, 0.0);
  EnergyBreakdown e0 = total_energy(z, pz, 0.7, 0.0, zs);
  CHECK(e0.potential == 0.0);
  CHECK(e0.viscous == 0.0);
}

TEST_CASE("energy of the zero competitor is below the reference bound") {
  ProblemSpec p = modulated();
  Grid g = Grid::make(10.0, 2001);
  Profile qs = make_reference(g, p.reference());
  double abar = modulation_upper(p.modulation);
  double visc = 0.5 * oracle::gk([&](double x) { double d = p.reference().derivative(x); return d * d; }, -1, 1);
  double pot = oracle::gk([&](double x) { return abar * potential_eval_grad(p.potential, p.reference().eval(x)).first; }, -1, 1);
  for (double eta : {0.01, 0.1, 1.0})
    for (double mu : {0.05, 1.0}) {
      EnergyBreakdown e = total_energy(qs, p, eta, mu, qs);
      CHECK(e.total <= visc + pot + 1e-6);
    }
}

TEST_CASE("gradient matches central differences") {
  ProblemSpec p = modulated();
  Grid g = Grid::make(12.0, 481);
  std::mt19937_64 rng(17);
  Profile qs = make_reference(g, p.reference());
  Profile q = perturbed(g, p.reference(), rng, 1.0);
  EnergyModel m(p, g, qs);
  double eta = 0.1, mu = 0.05;
  Field grad = m.gradient(q, eta, mu);
  std::uniform_int_distribution<std::size_t> node(1, g.n - 2);
  double worst = 0;
  for (int t = 0; t < 50; ++t) {
    std::size_t i = node(rng);
    double e = 1e-6;
    Profile a = q, b = q;
    a.values[i] += e;
    b.values[i] -= e;
    double fd = (m.energy(a, eta, mu).total - m.energy(b, eta, mu).total) / (2 * e);
    double rel = std::fabs(grad[i] - fd) / (1 + std::fabs(grad[i]));
    worst = std::max(worst, rel);
  }
  MESSAGE("worst relative gradient error " << worst);
  CHECK(worst <= 1e-6);
}

TEST_CASE("gradient is h times the full operator") {
  ProblemSpec p = modulated();
  std::mt19937_64 rng(23);
  for (std::size_t n : {481u, 2001u}) {
    Grid g = Grid::make(20.0, n);
    Profile qs = make_reference(g, p.reference());
    Profile q = perturbed(g, p.reference(), rng, 0.8);
    Field grad = energy_gradient(q, p, 0.05, 0.3, qs);
    Field op = apply_full_operator(q, p, 0.05, 0.3, qs);
    for (std::size_t i = 1; i + 1 < n; ++i) CHECK(std::fabs(grad[i] - g.h() * op[i]) <= 1e-10);
    CHECK(grad.front() == 0.0);
    CHECK(grad.back() == 0.0);
  }
}

TEST_CASE("gradient vanishes at a well") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::make(10.0, 401);
  Profile z = Profile::constant(g, 0.0);
  Field grad = energy_gradient(z, p, 0.3, 0.0, z);
  for (double v : grad) CHECK(std::fabs(v) < 1e-14);
}

TEST_CASE("interaction gradient at Q# is h L Q#") {
  ProblemSpec p = homogeneous();
  Grid g = Grid::make(8.0, 161);
  Profile qs = make_reference(g, p.reference());
  EnergyModel m(p, g, qs);
  LatticeKernel lat(p.kernel, g.h(), g.n, TailClosure::AnalyticPower);
  for (std::size_t i : {40u, 75u, 80u, 90u, 130u}) {
    // differentiate the plane double sum directly
    double e = 1e-5;
    Profile a = qs, b = qs;
    a.values[i] += e;
    b.values[i] -= e;
    double fd = 0.25 * (renormalized_interaction(a, qs, lat, Interval::line(), Interval::line()) -
                        renormalized_interaction(b, qs, lat, Interval::line(), Interval::line())) /
                (2 * e);
    CHECK(fd == doctest::Approx(g.h() * m.L_qsharp()[i]).epsilon(1e-6).scale(1e-3));
  }
}
