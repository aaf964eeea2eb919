#include "nlhet/diagnostics.hpp"

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

// nodes with x in [lo, hi]
std::pair<std::size_t, std::size_t> node_span(const Grid& g, double lo, double hi) {
  const double h = g.h();
  double a = std::ceil((lo + g.R) / h - 1e-9), b = std::floor((hi + g.R) / h + 1e-9);
  a = std::max(a, 0.0);
  b = std::min(b, double(g.n - 1));
  if (b < a) return {1, 0};
  return {std::size_t(a), std::size_t(b)};
}

void require_inside(const Grid& g, const Interval& I, const char* what) {
  const double eps = 1e-9 * g.h();
  if ((std::isfinite(I.lo) && I.lo < -g.R - eps) || (std::isfinite(I.hi) && I.hi > g.R + eps) || !(I.hi > I.lo))
    throw DomainError(std::string(what) + ": interval [" + num(I.lo) + ", " + num(I.hi) + "] is not inside the window [-" +
                      num(g.R) + ", " + num(g.R) + "]");
}

}  // namespace

CleanIntervalReport find_clean_intervals(const Profile& q, double rho, const std::vector<double>& wells,
                                         const Interval& search) {
  if (!(rho > 0.0 && rho < 1.0)) throw PreconditionError("find_clean_intervals: rho must lie in (0, 1)");
  const Grid& g = q.grid;
  require_inside(g, search, "find_clean_intervals");
  CleanIntervalReport rep;
  rep.rho = rho;
  rep.min_length = std::fabs(std::log(rho));
  auto [first, last] = node_span(g, std::max(search.lo, -g.R), std::min(search.hi, g.R));
  if (last < first) return rep;
  for (double z : wells) {
    std::size_t i = first;
    while (i <= last) {
      if (std::fabs(q.values[i] - z) > rho) {
        ++i;
        continue;
      }
      std::size_t j = i;
      double sup = std::fabs(q.values[i] - z);
      while (j + 1 <= last && std::fabs(q.values[j + 1] - z) <= rho) sup = std::max(sup, std::fabs(q.values[++j] - z));
      double lo = g.x(std::int64_t(i)), hi = g.x(std::int64_t(j));
      if (double(j - i) * g.h() >= rep.min_length - 1e-9 * g.h()) rep.intervals.push_back({lo, hi, i, j, z, sup});
      i = j + 1;
    }
  }
  std::sort(rep.intervals.begin(), rep.intervals.end(),
            [](const CleanInterval& a, const CleanInterval& b) { return a.first < b.first; });
  for (const auto& c : rep.intervals) rep.clean_points.push_back(c.center());
  return rep;
}

bool is_clean_point(const Profile& q, double x, double rho, double zeta) {
  const Grid& g = q.grid;
  double half = 0.5 * std::fabs(std::log(rho));
  double lo = x - half, hi = x + half;
  if (lo < -g.R && std::fabs(q.left_const - zeta) > rho) return false;
  if (hi > g.R && std::fabs(q.right_const - zeta) > rho) return false;
  auto [a, b] = node_span(g, lo, hi);
  for (std::size_t i = a; i <= b && b >= a; ++i)
    if (std::fabs(q.values[i] - zeta) > rho) return false;
  return true;
}

StickinessReport stickiness_check(const Profile& q, double x1, double x2, const ProblemSpec& spec, double eta, double mu,
                                  double rho, double r, double tol) {
  if (!(x2 >= x1 + 4.0)) throw PreconditionError("stickiness_check: need x2 >= x1 + 4 (got " + num(x1) + ", " + num(x2) + ")");
  const Grid& g = q.grid;
  if (x1 < -g.R || x2 > g.R) throw DomainError("stickiness_check: points outside the window");
  double zeta = kNaN;
  for (double z : {spec.potential.zeta1, spec.potential.zeta2})
    if (std::isnan(zeta) && is_clean_point(q, x1, rho, z) && is_clean_point(q, x2, rho, z)) zeta = z;
  if (std::isnan(zeta))
    throw PreconditionError("stickiness_check: " + num(x1) + " and " + num(x2) + " are not clean points for a common well");

  StickinessReport s;
  s.x1 = x1;
  s.x2 = x2;
  s.well = zeta;
  s.r = r;
  s.tol = tol;
  const double h = g.h();
  auto [a, b] = node_span(g, x1, x2);
  Profile qs = make_reference(g, spec.reference());
  double vis = 0.0, pen = 0.0, pot = 0.0;
  for (std::size_t i = a; i <= b; ++i) {
    double w = (i == a || i == b) ? 0.5 * h : h;
    double v = q.values[i] - qs.values[i];
    pen += w * v * v;
    pot += w * modulation_eval(spec.modulation, g.x(std::int64_t(i))) * potential_eval_grad(spec.potential, q.values[i]).first;
    if (i < b) vis += (q.values[i + 1] - q.values[i]) * (q.values[i + 1] - q.values[i]);
    s.sup_dev = std::max(s.sup_dev, std::fabs(q.values[i] - zeta));
  }
  Interval I{g.x(std::int64_t(a)) - 0.5 * h, g.x(std::int64_t(b)) + 0.5 * h};
  s.viscous = 0.5 * eta * vis / h;
  s.penalty = 0.5 * mu * pen;
  s.potential = pot;
  s.interaction = 0.25 * bilinear_form(q, q, I, I, spec.kernel);
  s.localized_energy = s.viscous + s.penalty + s.interaction + s.potential;
  s.pass = s.sup_dev <= 0.5 * r && s.localized_energy <= tol;
  return s;
}

LSReport lewy_stampacchia_check(const Profile& q, const ObstaclePair& pair, const ProblemSpec& spec, double eta,
                                double mu, const Interval& I, double slack) {
  const Grid& g = q.grid;
  if (pair.Phi.grid != g || pair.Psi.grid != g) throw DomainError("lewy_stampacchia_check: grid mismatch");
  require_inside(g, I, "lewy_stampacchia_check");
  const double h = g.h();
  LSReport rep;
  rep.I = I;
  rep.slack = std::isnan(slack) ? 2e-8 * double(g.n) / h : slack;
  NonlocalOperator op(spec.kernel, g, default_tail(spec.kernel));
  Field LQ = op.apply(q), LF = op.apply(pair.Phi), LS = op.apply(pair.Psi);
  Profile qs = make_reference(g, spec.reference());
  auto d2 = [&](const Profile& p, std::size_t i) {
    return (p.at(std::int64_t(i) + 1) - 2.0 * p.values[i] + p.at(std::int64_t(i) - 1)) / (h * h);
  };
  double lowF = INFINITY, upS = -INFINITY, fmin = INFINITY, fmax = -INFINITY;
  std::vector<std::size_t> nodes;
  std::vector<double> val;
  for (std::size_t i = 1; i + 1 < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (!(x > I.lo && x < I.hi)) continue;
    nodes.push_back(i);
    double f = -modulation_eval(spec.modulation, x) * potential_eval_grad(spec.potential, q.values[i]).second -
               mu * (q.values[i] - qs.values[i]);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
    lowF = std::min(lowF, -std::fabs(d2(pair.Phi, i)) + LF[i]);
    upS = std::max(upS, std::fabs(d2(pair.Psi, i)) + LS[i]);
    val.push_back(-eta * d2(q, i) + LQ[i]);
  }
  rep.nodes = nodes.size();
  if (nodes.empty()) throw DomainError("lewy_stampacchia_check: no interior node in the interval");
  rep.lower = std::min(lowF, fmin);
  rep.upper = std::max(upS, fmax);
  rep.value_min = *std::min_element(val.begin(), val.end());
  rep.value_max = *std::max_element(val.begin(), val.end());
  rep.worst_violation = -INFINITY;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    double viol = std::max(rep.lower - rep.slack - val[k], val[k] - rep.upper - rep.slack);
    if (viol > rep.worst_violation) {
      rep.worst_violation = viol;
      rep.worst_at = g.x(std::int64_t(nodes[k]));
    }
  }
  rep.pass = rep.worst_violation <= 0.0;
  return rep;
}

double holder_estimate(const Profile& q, const Interval& I, double alpha, double s) {
  if (!(alpha > 0.0 && alpha < 2.0 * s)) throw PreconditionError("holder_estimate: need 0 < alpha < 2s");
  const Grid& g = q.grid;
  require_inside(g, I, "holder_estimate");
  auto [a, b] = node_span(g, I.lo, I.hi);
  double m = 0.0;
  for (std::size_t i = a; i <= b && b >= a; ++i)
    for (std::size_t j = i + 1; j <= b; ++j) {
      double d = g.x(std::int64_t(j)) - g.x(std::int64_t(i));
      m = std::max(m, std::fabs(q.values[j] - q.values[i]) / std::pow(d, alpha));
    }
  return m;
}

double holder_clean_shape(double rho, double alpha, double s, double mu) {
  double e = 1.0 - alpha / (2.0 * s);
  return std::pow(rho, e) / std::pow(std::fabs(std::log(rho)), alpha) + rho + std::pow(mu, alpha / (2.0 * s)) * std::pow(rho, e);
}

Profile glue_profile(const Profile& q, double x0, double zeta, double beta) {
  if (!(beta >= 1.0)) throw PreconditionError("glue_profile: beta must be >= 1");
  const Grid& g = q.grid;
  if (x0 < -g.R || x0 + beta > g.R) throw DomainError("glue_profile: x0 + beta leaves the window");
  const double h = g.h();
  std::size_t k = std::size_t(std::llround((x0 + g.R) / h));
  double xk = g.x(std::int64_t(k)), qk = q.values[k];
  Profile p = q;
  for (std::size_t i = k + 1; i < g.n; ++i) {
    double t = g.x(std::int64_t(i)) - xk;
    p.values[i] = t <= 1.0 ? qk + (zeta - qk) * t : zeta;
  }
  p.right_const = zeta;
  return p;
}

double gluing_energy_defect(const Profile& q, const Profile& p, const Profile& qsharp, double x0, double beta, double T1,
                            double T2, const KernelSpec& kernel) {
  if (!(T1 < x0 && x0 < T2)) throw PreconditionError("gluing_energy_defect: need T1 < x0 < T2");
  LatticeKernel lat(kernel, q.grid.h(), q.grid.n, default_tail(kernel));
  auto E = [&](const Profile& u, const Interval& A) {
    Profile v = u;
    v.values.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v.values[i] = u.values[i] - qsharp.values[i];
    v.left_const = u.left_const - qsharp.left_const;
    v.right_const = u.right_const - qsharp.right_const;
    return bilinear_form(v, v, A, A, lat) + 2.0 * bilinear_form(v, qsharp, A, A, lat);
  };
  Interval full{T1, T2}, left{T1, x0}, right{x0, T2};
  double cross = bilinear_form(qsharp, qsharp, Interval{x0 - beta, x0}, Interval{x0, x0 + beta}, lat);
  return std::fabs(E(p, full) - E(q, left) - E(p, right) + 2.0 * cross);
}

TailFit fit_tail_decay(const Profile& q, Side side) {
  const Grid& g = q.grid;
  TailFit f;
  f.side = side;
  double zeta = side == Side::Right ? q.right_const : q.left_const;
  for (std::size_t i = 5; i + 5 < g.n; ++i) {
    double x = g.x(std::int64_t(i));
    if (side == Side::Right ? x < 0.5 * g.R : x > -0.5 * g.R) continue;
    double d = std::fabs(q.values[i] - zeta);
    if (d < 1e-13)
      throw DegenerateFitError("fit_tail_decay: deviation " + num(d) + " below 1e-13 at x = " + num(x) + "; nothing to fit");
    f.x.push_back(x);
    f.log_abs_dev.push_back(std::log(d));
  }
  const std::size_t m = f.x.size();
  if (m < 3) throw DegenerateFitError("fit_tail_decay: fewer than 3 nodes in the fit region");
  double sx = 0, sy = 0;
  for (std::size_t k = 0; k < m; ++k) sx += std::log(std::fabs(f.x[k])), sy += f.log_abs_dev[k];
  double mx = sx / double(m), my = sy / double(m), sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    double dx = std::log(std::fabs(f.x[k])) - mx, dy = f.log_abs_dev[k] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  f.fitted_exponent = sxy / sxx;
  f.fitted_constant = std::exp(my - f.fitted_exponent * mx);
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

double monotonicity_defect(const Profile& q) {
  double sign = q.right_const >= q.left_const ? 1.0 : -1.0;
  double run = -INFINITY, worst = 0.0;
  for (double v : q.values) {
    run = std::max(run, sign * v);
    worst = std::max(worst, run - sign * v);
  }
  return worst;
}

std::vector<double> tail_envelope(const Profile& q, Side side) {
  const Grid& g = q.grid;
  std::vector<double> env;
  double m = 0.0;
  if (side == Side::Right) {
    for (std::size_t i = g.n; i-- > 0 && g.x(std::int64_t(i)) >= 0.0;) {
      m = std::max(m, std::fabs(q.values[i] - q.right_const));
      env.push_back(m);
    }
  } else {
    for (std::size_t i = 0; i < g.n && g.x(std::int64_t(i)) <= 0.0; ++i) {
      m = std::max(m, std::fabs(q.values[i] - q.left_const));
      env.push_back(m);
    }
  }
  std::reverse(env.begin(), env.end());
  return env;
}

}  // namespace nlhet

namespace nlhet {

ShiftFit best_shift_fit(const Profile& q, const std::function<double(double)>& f, double lo, double hi) {
  if (!(hi > lo)) throw PreconditionError("best_shift_fit: need lo < hi");
  const Grid& g = q.grid;
  auto dist = [&](double c) {
    double m = 0.0;
    for (std::size_t i = 1; i + 1 < g.n; ++i) m = std::max(m, std::fabs(q.values[i] - f(g.x(std::int64_t(i)) - c)));
    return m;
  };
  double step = g.h(), best = lo, bd = dist(lo);
  for (double c = lo + step; c <= hi; c += step) {
    double d = dist(c);
    if (d < bd) bd = d, best = c;
  }
  double a = std::max(lo, best - step), b = std::min(hi, best + step);
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c1 = b - r * (b - a), c2 = a + r * (b - a), d1 = dist(c1), d2 = dist(c2);
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (d1 < d2) {
      b = c2, c2 = c1, d2 = d1, c1 = b - r * (b - a), d1 = dist(c1);
    } else {
      a = c1, c1 = c2, d1 = d2, c2 = a + r * (b - a), d2 = dist(c2);
    }
  }
  ShiftFit out{best, bd};
  if (d1 < out.linf) out = {c1, d1};
  if (d2 < out.linf) out = {c2, d2};
  return out;
}

}  // namespace nlhet

namespace nlhet {

StickinessSweep stickiness_sweep(const Profile& q, const ProblemSpec& spec, double eta, double mu, double rho, double r,
                                 double tol, int per_interval) {
  if (per_interval < 2) throw PreconditionError("stickiness_sweep: need at least 2 samples per interval");
  const Grid& g = q.grid;
  const double h = g.h();
  CleanIntervalReport rep = find_clean_intervals(q, rho, {spec.potential.zeta1, spec.potential.zeta2});
  std::vector<std::pair<double, double>> pts;  // (x, well)
  double half = 0.5 * rep.min_length + h;
  for (const auto& I : rep.intervals) {
    double a = I.lo + half, b = I.hi - half;
    if (b < a) continue;
    for (int k = 0; k < per_interval; ++k) {
      double t = a + (b - a) * double(k) / double(per_interval - 1);
      double x = g.x(std::llround((t + g.R) / h));
      if (is_clean_point(q, x, rho, I.well) && (pts.empty() || pts.back().first != x)) pts.push_back({x, I.well});
    }
  }
  StickinessSweep sw;
  sw.pass = true;
  for (const auto& p : pts) sw.points.push_back(p.first);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[i].second != pts[j].second || pts[j].first < pts[i].first + 4.0) continue;
      StickinessReport s = stickiness_check(q, pts[i].first, pts[j].first, spec, eta, mu, rho, r, tol);
      sw.worst_energy = std::max(sw.worst_energy, s.localized_energy);
      sw.worst_dev = std::max(sw.worst_dev, s.sup_dev);
      sw.pass = sw.pass && s.pass;
      sw.pairs.push_back(s);
    }
  return sw;
}

}  // namespace nlhet
