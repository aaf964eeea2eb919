#include <doctest.h>

#include <cmath>
#include <random>

#include "nlhet/appendix_bench.hpp"
#include "nlhet/errors.hpp"
#include "nlhet/model.hpp"
#include "oracles.hpp"

#include <boost/math/quadrature/gauss.hpp>

using namespace nlhet;

namespace {

// [u]^2 = 2 int_0^inf t^{-1-2s} int (u(x+t) - u(x))^2 dx dt for u supported in [-1, 1]
double template_seminorm_sq(double s) {
  auto D = [](double t) {
    auto f = [t](double x) {
      double d = bump_template(x + t) - bump_template(x);
      return d * d;
    };
    // polynomial pieces: fixed Gauss rules on the break intervals are exact
    double a = -1.0 - t, b = std::min(-1.0, 1.0 - t), c = std::max(-1.0, 1.0 - t);
    using G = boost::math::quadrature::gauss<double, 30>;
    return G::integrate(f, a, b) + G::integrate(f, b, c) + G::integrate(f, c, 1.0);
  };
  double l2sq = oracle::gk(
      [](double x) {
        double v = bump_template(x);
        return v * v;
      },
      -1.0, 1.0);
  double body = oracle::gk_split([&](double t) { return t == 0.0 ? 0.0 : std::pow(t, -1.0 - 2.0 * s) * D(t); }, 0.0, 2.0,
                                 {1e-3, 1e-2, 0.1, 1.0});
  // beyond t = 2 the shifted copies are disjoint
  return 2.0 * body + 4.0 * l2sq * std::pow(2.0, -2.0 * s) / (2.0 * s);
}

}  // namespace

TEST_CASE("bump template: peak, support and range") {
  CHECK(bump_template(0.0) == 1.0);
  CHECK(bump_template(1.0) == 0.0);
  CHECK(bump_template(-1.5) == 0.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> X(-3.0, 15.0);
  std::uniform_int_distribution<int> K(0, 12);
  BumpFamily f;
  for (int t = 0; t < 2000; ++t) {
    int k = K(rng);
    double x = X(rng), v = f.eval(k, x);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    if (std::fabs(x - k) >= std::exp(-double(k))) CHECK(v == 0.0);
  }
}

TEST_CASE("k = 0 member matches direct quadrature of the template") {
  // 2 int_0^1 (1 - x^2)^8 = B(1/2, 9)
  double l2sq = std::sqrt(kPi) * std::tgamma(9.0) / std::tgamma(9.5);
  for (double s : {0.3, 0.4}) {
    BumpFamily f;
    f.s = s;
    NormPair p = bump_norms(f, 0);
    CHECK(p.l2 * p.l2 == doctest::Approx(l2sq).epsilon(1e-12));
    CHECK(p.hs * p.hs == doctest::Approx(template_seminorm_sq(s)).epsilon(2e-4));
  }
}

TEST_CASE("bump scaling ratios") {
  for (double s : {0.3, 0.4}) {
    for (BumpCenter c : {BumpCenter::K, BumpCenter::InverseK}) {
      BumpFamily f;
      f.s = s;
      f.center = c;
      ScalingTable t = bump_scaling(f, c == BumpCenter::K ? 0 : 1, 12);
      CHECK(t.pass);
      CHECK(t.worst_l2 <= 0.03);
      CHECK(t.worst_hs <= 0.03);
      for (std::size_t i = 1; i < t.rows.size(); ++i) {
        CHECK(t.rows[i].ratio_l2 == doctest::Approx(std::exp(-0.5)).epsilon(0.03));
        CHECK(t.rows[i].ratio_hs == doctest::Approx(std::exp(-(1.0 - 2.0 * s) / 2.0)).epsilon(0.03));
      }
    }
  }
}

TEST_CASE("bump ratios are stable under doubled resolution") {
  BumpFamily f;
  f.s = 0.3;
  ScalingTable a = bump_scaling(f, 0, 8);
  f.nodes_per_unit *= 2;
  ScalingTable b = bump_scaling(f, 0, 8);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    CHECK(std::fabs(b.rows[i].ratio_l2 / a.rows[i].ratio_l2 - 1.0) < 0.01);
    CHECK(std::fabs(b.rows[i].ratio_hs / a.rows[i].ratio_hs - 1.0) < 0.01);
  }
}

TEST_CASE("bump family guards") {
  BumpFamily f;
  f.s = 0.5;
  CHECK_THROWS_AS(bump_norms(f, 1), PreconditionError);
  f.s = 0.3;
  CHECK_THROWS_AS(bump_norms(f, 40), ResolutionError);
  f.center = BumpCenter::InverseK;
  CHECK_THROWS_AS(bump_norms(f, 0), PreconditionError);
  CHECK_THROWS_AS(bump_norms(f, 40), ResolutionError);
}

TEST_CASE("superposition tail witness") {
  BumpFamily f;
  std::vector<double> xs;
  for (int k = 5; k <= 20; ++k) {
    xs.push_back(double(k));
    xs.push_back(k + 0.5);
  }
  TailWitness w = superposition_tail_witness(f, 25, xs);
  CHECK(w.centers == 16);
  CHECK(w.midpoints == 16);
  CHECK(w.center_max == 1.0);
  CHECK(w.midpoint_max == 0.0);
  // every sampled center equals 1, not only the max
  for (int k = 5; k <= 20; ++k) CHECK(superposition_tail_witness(f, 25, {double(k)}).center_max == 1.0);
}

TEST_CASE("superposition norm is bounded by the member sum") {
  for (double s : {0.3, 0.4}) {
    BumpFamily f;
    f.s = s;
    SuperpositionNorm n = superposition_norm(f, 1, 8);
    CHECK(n.l2_cross == 0.0);
    CHECK(n.norm > 0.0);
    CHECK(n.norm <= n.member_sum);
  }
}

TEST_CASE("disjoint members have exactly zero pointwise products") {
  BumpFamily f;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> K(1, 15);
  for (int t = 0; t < 500; ++t) {
    int k = K(rng), l = K(rng);
    if (k == l) continue;
    std::uniform_real_distribution<double> X(k - 1.0, k + 1.0);
    for (int j = 0; j < 20; ++j) {
      double x = X(rng);
      CHECK(f.eval(k, x) * f.eval(l, x) == 0.0);
    }
  }
}

TEST_CASE("psi_bar shape") {
  CHECK(psi_bar(1.0) == 0.0);
  CHECK(psi_bar(-2.0) == 0.0);
  CHECK(psi_bar(0.5) == doctest::Approx(std::log(1.0 + std::log(2.0))));
  CHECK(psi_bar(1e-300) > psi_bar(1e-100));
  CHECK(psi_bar(1e-100) > psi_bar(1e-10));
  CHECK(std::isinf(psi_bar(0.0)));
  TraceExample e;
  CHECK(e.eval(2, std::exp(2.0) + 0.5 * std::exp(-2.0)) == doctest::Approx(std::exp(-2.0) * psi_bar(0.5)));
}

TEST_CASE("trace example L2 norm matches direct quadrature") {
  double l2sq = 2.0 * boost::math::quadrature::tanh_sinh<double>().integrate(
                          [](double x) {
                            double v = psi_bar(x);
                            return v * v;
                          },
                          0.0, 1.0);
  TraceExample e;
  CHECK(trace_norms(e, 0).l2 * trace_norms(e, 0).l2 == doctest::Approx(l2sq).epsilon(1e-8));
}

TEST_CASE("trace scaling ratios and resolution stability") {
  TraceExample e;
  ScalingTable a = trace_scaling(e, 0, 6);
  CHECK(a.pass);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].ratio_l2 == doctest::Approx(std::exp(-1.5)).epsilon(0.05));
    CHECK(a.rows[i].ratio_hs == doctest::Approx(std::exp(-1.0)).epsilon(0.05));
  }
  e.nodes_per_unit *= 2;
  ScalingTable b = trace_scaling(e, 0, 6);
  for (std::size_t i = 1; i < a.rows.size(); ++i) {
    CHECK(std::fabs(b.rows[i].ratio_l2 / a.rows[i].ratio_l2 - 1.0) < 0.01);
    CHECK(std::fabs(b.rows[i].ratio_hs / a.rows[i].ratio_hs - 1.0) < 0.01);
  }
}

TEST_CASE("psi_bar seminorm converges under refinement") {
  TraceExample e;
  e.nodes_per_unit = 500;
  double coarse = trace_norms(e, 0).hs;
  e.nodes_per_unit = 2000;
  double fine = trace_norms(e, 0).hs;
  CHECK(std::isfinite(fine));
  CHECK(fine >= coarse);
  CHECK(std::fabs(fine / coarse - 1.0) < 0.10);
}

TEST_CASE("default bench passes") {
  BenchReport r = run_appendix_bench(BenchConfig{});
  CHECK(r.tables.size() == 3);
  CHECK(r.stable);
  CHECK(r.pass);
}
