#include "nlhet/obstacles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlhet/errors.hpp"
#include "nlhet/parallel.hpp"

namespace nlhet {

namespace {

std::string num(double v) {
  std::ostringstream o;
  o.precision(6);
  o << v;
  return o.str();
}

// C^1 cubic Hermite step from 0 at t = 0 to 1 at t = 1, flat ends
double hermite_step(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

double exterior_value(const ObstacleConfig& cfg, double x, int sign) {
  return (x <= 0.5 * (cfg.b1 + cfg.b2) ? cfg.zeta1 : cfg.zeta2) + sign * cfg.r;
}

void check_window(const ObstacleConfig& cfg, const Grid& grid) {
  double need_lo = cfg.b1 - 2.0 * cfg.tau - 1.0, need_hi = cfg.b2 + 2.0 * cfg.tau + 1.0;
  if (-grid.R > need_lo || grid.R < need_hi)
    throw DomainError("barrier solve: window [-" + num(grid.R) + ", " + num(grid.R) + "] does not contain [" +
                      num(need_lo) + ", " + num(need_hi) + "]");
}

}  // namespace

ObstacleConfig make_obstacle_config(const ProblemSpec& spec, const ObstacleParams& p, std::vector<std::string>* notes) {
  ObstacleConfig c;
  auto note = [&](const std::string& s) {
    if (notes) notes->push_back(s);
  };
  ModulationSpec m = resolve_modulation(spec.modulation);
  c.b1 = p.b1;
  c.b2 = p.b2;
  if (std::isnan(c.b1)) {
    c.b1 = std::isnan(m.m1) ? -1.0 : std::min(m.m1, -1.0);
    note("obstacles.b1 defaulted to " + num(c.b1));
  }
  if (std::isnan(c.b2)) {
    c.b2 = std::isnan(m.m2) ? 1.0 : std::max(m.m2, 1.0);
    note("obstacles.b2 defaulted to " + num(c.b2));
  }
  double cap = std::min(spec.potential.resolved_delta0(), spec.kernel.r0);
  c.r = p.r;
  if (std::isnan(c.r)) {
    c.r = 0.5 * cap;
    note("obstacles.r defaulted to " + num(c.r));
  }
  c.tau = p.tau;
  if (!(c.b1 <= -1.0)) throw ConfigError("obstacles.b1 must be <= -1 (got " + num(c.b1) + ")");
  if (!(c.b2 >= 1.0)) throw ConfigError("obstacles.b2 must be >= 1 (got " + num(c.b2) + ")");
  if (!(c.tau > 0.0 && c.tau < 1.0)) throw ConfigError("obstacles.tau must lie in (0, 1) (got " + num(c.tau) + ")");
  if (!(c.r > 0.0 && c.r <= cap)) throw ConfigError("obstacles.r must lie in (0, " + num(cap) + "] (got " + num(c.r) + ")");
  c.zeta1 = spec.potential.zeta1;
  c.zeta2 = spec.potential.zeta2;
  double amax = std::max(std::fabs(modulation_lower(spec.modulation)), std::fabs(modulation_upper(spec.modulation)));
  c.C0_rhs = amax * potential_slope_bound(spec.potential) + 2.0 * std::fabs(c.zeta1) + 2.0 * std::fabs(c.zeta2) + 1.0;
  return c;
}

std::pair<BarrierSolve, BarrierSolve> solve_barriers(const ProblemSpec& spec, const ObstacleConfig& cfg, const Grid& grid,
                                                     double eta) {
  if (eta < 0.0) throw DomainError("barrier solve: eta must be nonnegative");
  check_window(cfg, grid);
  NonlocalOperator op(spec.kernel, grid, default_tail(spec.kernel));
  const LatticeKernel& lat = op.lattice();
  const double h = grid.h(), lo = cfg.b1 - cfg.tau, hi = cfg.b2 + cfg.tau;
  const double visc = eta / (h * h);

  std::vector<std::size_t> dom;
  std::vector<char> in(grid.n, 0);
  for (std::size_t i = 1; i + 1 < grid.n; ++i) {
    double x = grid.x(std::int64_t(i));
    if (x > lo && x < hi) dom.push_back(i), in[i] = 1;
  }
  const std::size_t m = dom.size();
  if (m == 0) throw DomainError("barrier solve: no grid node in (b1 - tau, b2 + tau)");

  // A u = sign C0 + cl gl + cr gr
  Eigen::MatrixXd A(m, m);
  Eigen::VectorXd cl(m), cr(m);  // couplings to the exterior left / right of the domain
  parallel_for(0, m, [&](std::size_t a) {
    std::size_t i = dom[a];
    double left = op.left_coupling(i), right = op.right_coupling(i);
    for (std::size_t j = 0; j < grid.n; ++j) {
      if (j == i || in[j]) continue;
      std::size_t k = j > i ? j - i : i - j;
      double w = lat.weight(std::int64_t(k)) + (k == 1 ? visc : 0.0);
      if (grid.x(std::int64_t(j)) <= lo) left += w;
      else right += w;
    }
    for (std::size_t b = 0; b < m; ++b) {
      std::size_t j = dom[b];
      if (j == i) {
        A(a, b) = op.diag(i) + 2.0 * visc;
      } else {
        std::size_t k = j > i ? j - i : i - j;
        A(a, b) = -lat.weight(std::int64_t(k)) - (k == 1 ? visc : 0.0);
      }
    }
    cl[a] = left;
    cr[a] = right;
  });

  Eigen::LLT<Eigen::MatrixXd> llt(A);
  double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() != Eigen::Success || !(rcond > 1e3 * std::numeric_limits<double>::epsilon()))
    throw LinearSolveError("barrier system is singular or not positive definite (rcond " + num(rcond) + ")", rcond);

  auto one = [&](int sign) {
    double gl = cfg.zeta1 + sign * cfg.r, gr = cfg.zeta2 + sign * cfg.r;
    Eigen::VectorXd b = Eigen::VectorXd::Constant(Eigen::Index(m), sign * cfg.C0_rhs) + gl * cl + gr * cr;
    Eigen::VectorXd u = llt.solve(b);
    double res = (A * u - b).lpNorm<Eigen::Infinity>();
    if (!(res <= 1e-8 * cfg.C0_rhs))
      throw LinearSolveError("barrier residual " + num(res) + " exceeds 1e-8 C0", rcond);
    BarrierSolve s;
    s.u.grid = grid;
    s.u.left_const = gl;
    s.u.right_const = gr;
    s.u.values.resize(grid.n);
    for (std::size_t j = 0; j < grid.n; ++j) s.u.values[j] = exterior_value(cfg, grid.x(std::int64_t(j)), sign);
    for (std::size_t a = 0; a < m; ++a) s.u.values[dom[a]] = u[Eigen::Index(a)];
    s.residual = res;
    s.rcond = rcond;
    return s;
  };
  return {one(+1), one(-1)};
}

Profile solve_barrier(const ProblemSpec& spec, const ObstacleConfig& cfg, const Grid& grid, double eta, int sign) {
  if (sign != 1 && sign != -1) throw DomainError("solve_barrier: sign must be +1 or -1");
  auto both = solve_barriers(spec, cfg, grid, eta);
  return sign > 0 ? both.first.u : both.second.u;
}

ObstaclePair build_envelopes(const Profile& phi, const Profile& psi, const ObstacleConfig& cfg) {
  if (phi.grid != psi.grid) throw DomainError("build_envelopes: barriers on different grids");
  const Grid& g = phi.grid;
  const double h = g.h();
  if (!(cfg.tau > 0.0) || 2.0 * cfg.tau < h)
    throw ConstructionError("collar", -1, "collar (b1 - 2 tau, b1] holds no grid node (tau " + num(cfg.tau) + ", h " + num(h) + ")");

  double phimax = -INFINITY, psimin = INFINITY;
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x > cfg.b1 && x < cfg.b2) {
      phimax = std::max(phimax, phi.values[i]);
      psimin = std::min(psimin, psi.values[i]);
    }
  }
  double P = std::isfinite(phimax) ? phimax + 0.25 * cfg.r : std::max(cfg.zeta1, cfg.zeta2) + cfg.r;
  double p = std::isfinite(psimin) ? psimin - 0.25 * cfg.r : std::min(cfg.zeta1, cfg.zeta2) - cfg.r;
  double ramp = std::min(cfg.tau, 0.5 * (cfg.b2 - cfg.b1));

  ObstaclePair out{phi, psi, phi, psi};
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x <= cfg.b1 - 2.0 * cfg.tau || x >= cfg.b2 + 2.0 * cfg.tau) continue;
    if (x <= cfg.b1) {
      out.Phi.values[i] = std::min(phi.values[i], cfg.zeta1 + cfg.r);
      out.Psi.values[i] = std::max(psi.values[i], cfg.zeta1 - cfg.r);
    } else if (x >= cfg.b2) {
      out.Phi.values[i] = std::min(phi.values[i], cfg.zeta2 + cfg.r);
      out.Psi.values[i] = std::max(psi.values[i], cfg.zeta2 - cfg.r);
    } else {
      double wl = hermite_step((x - cfg.b1) / ramp), wr = hermite_step((cfg.b2 - x) / ramp);
      double up = std::min(cfg.zeta1 + cfg.r + (P - cfg.zeta1 - cfg.r) * wl, cfg.zeta2 + cfg.r + (P - cfg.zeta2 - cfg.r) * wr);
      double dn = std::max(cfg.zeta1 - cfg.r + (p - cfg.zeta1 + cfg.r) * wl, cfg.zeta2 - cfg.r + (p - cfg.zeta2 + cfg.r) * wr);
      out.Phi.values[i] = std::max(phi.values[i], up);
      out.Psi.values[i] = std::min(psi.values[i], dn);
    }
  }
  verify_envelopes(out, cfg);
  return out;
}

void verify_envelopes(const ObstaclePair& pr, const ObstacleConfig& cfg) {
  const Grid& g = pr.phi.grid;
  const double tol = 1e-12 * (1.0 + std::fabs(cfg.zeta1) + std::fabs(cfg.zeta2) + cfg.r);
  auto fail = [](const std::string& clause, std::size_t i, const std::string& msg) {
    throw ConstructionError(clause, long(i), msg);
  };
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    double F = pr.Phi.values[i], f = pr.phi.values[i], S = pr.Psi.values[i], s = pr.psi.values[i];
    std::string at = "x = " + num(x);
    if (S > F + tol) fail("ordering", i, at + ": Psi > Phi");
    if (x <= cfg.b1 - 2.0 * cfg.tau || x >= cfg.b2 + 2.0 * cfg.tau) {
      if (F != f) fail("Phi.outside", i, at + ": Phi != phi");
      if (S != s) fail("Psi.outside", i, at + ": Psi != psi");
    } else if (x <= cfg.b1 || x >= cfg.b2) {
      double z = x <= cfg.b1 ? cfg.zeta1 : cfg.zeta2;
      if (F < z + 0.75 * cfg.r - tol) fail("Phi.collar_lower", i, at + ": Phi < zeta + 3r/4");
      if (F > z + 1.25 * cfg.r + tol) fail("Phi.collar_upper", i, at + ": Phi > zeta + 5r/4");
      if (F > f + tol) fail("Phi.collar_below_barrier", i, at + ": Phi > phi");
      if (S > z - 0.75 * cfg.r + tol) fail("Psi.collar_upper", i, at + ": Psi > zeta - 3r/4");
      if (S < z - 1.25 * cfg.r - tol) fail("Psi.collar_lower", i, at + ": Psi < zeta - 5r/4");
      if (S < s - tol) fail("Psi.collar_above_barrier", i, at + ": Psi < psi");
    } else {
      if (F < f - tol) fail("Phi.middle", i, at + ": Phi < phi");
      if (S > s + tol) fail("Psi.middle", i, at + ": Psi > psi");
    }
  }
  if (pr.Psi.left_const > pr.Phi.left_const || pr.Psi.right_const > pr.Phi.right_const)
    fail("ordering", 0, "far fields: Psi > Phi");
}

BandReport check_barrier_band(const Profile& phi, const Profile& psi, const ObstacleConfig& cfg) {
  BandReport b;
  b.limit = 0.25 * cfg.r;
  const Grid& g = phi.grid;
  for (std::size_t i = 0; i < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (x >= cfg.b1 - cfg.tau && x <= cfg.b1) {
      b.phi_left = std::max(b.phi_left, std::fabs(phi.values[i] - cfg.zeta1 - cfg.r));
      b.psi_left = std::max(b.psi_left, std::fabs(psi.values[i] - cfg.zeta1 + cfg.r));
    }
    if (x >= cfg.b2 && x <= cfg.b2 + cfg.tau) {
      b.phi_right = std::max(b.phi_right, std::fabs(phi.values[i] - cfg.zeta2 - cfg.r));
      b.psi_right = std::max(b.psi_right, std::fabs(psi.values[i] - cfg.zeta2 + cfg.r));
    }
  }
  b.pass = std::max({b.phi_left, b.phi_right, b.psi_left, b.psi_right}) <= b.limit;
  return b;
}

bool constrained_node(const ObstacleConfig& cfg, double x) { return x <= cfg.b1 || x >= cfg.b2; }

Profile project_admissible(const Profile& q, const ObstaclePair& pair, const ObstacleConfig& cfg, ProjectionMode mode) {
  if (q.grid != pair.Phi.grid || q.grid != pair.Psi.grid) throw DomainError("project_admissible: grid mismatch");
  Profile out = q;
  for (std::size_t i = 0; i < q.size(); ++i) {
    double lo = pair.Psi.values[i], hi = pair.Phi.values[i];
    if (lo > hi) throw InvalidPairError("Psi > Phi at node " + std::to_string(i));
    if (mode == ProjectionMode::SigmaFull || constrained_node(cfg, q.grid.x(std::int64_t(i))))
      out.values[i] = std::clamp(q.values[i], lo, hi);
  }
  return out;
}

}  // namespace nlhet
