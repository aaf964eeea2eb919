#include "nlhet/model.hpp"

#include <algorithm>
#include <boost/math/interpolators/makima.hpp>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <sstream>

#include "nlhet/errors.hpp"

namespace nlhet {

namespace {

using Makima = boost::math::interpolators::makima<std::vector<double>>;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

std::shared_ptr<const TabulatedCurve> TabulatedCurve::make(std::vector<double> x, std::vector<double> y) {
  if (x.size() != y.size()) throw ConfigError("table: abscissa and value counts differ");
  if (x.size() < 4) throw ConfigError("table: at least 4 samples required");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw ConfigError("table: abscissae must be strictly increasing");
  auto* raw = new TabulatedCurve();
  std::shared_ptr<TabulatedCurve> t(raw);
  t->x_ = x;
  t->y_ = y;
  t->interp_ = std::make_shared<Makima>(std::move(x), std::move(y));
  return t;
}

double TabulatedCurve::value(double x) const {
  if (x < x_.front() || x > x_.back())
    throw DomainError("tabulated curve queried at " + fmt(x) + " outside [" + fmt(x_.front()) + ", " +
                      fmt(x_.back()) + "]");
  return (*static_cast<const Makima*>(interp_.get()))(x);
}

double TabulatedCurve::derivative(double x) const {
  if (x < x_.front() || x > x_.back())
    throw DomainError("tabulated curve queried at " + fmt(x) + " outside table");
  return static_cast<const Makima*>(interp_.get())->prime(x);
}

// ---------------------------------------------------------------- kernel

double fractional_laplacian_constant(double s) {
  return s * std::pow(4.0, s) * std::tgamma(0.5 + s) / (std::sqrt(kPi) * std::tgamma(1.0 - s));
}

namespace {

double tabulated_kernel(const KernelSpec& k, double r) {
  const auto& R = k.table_r;
  const auto& K = k.table_k;
  if (r > R.back()) return 0.0;
  if (r <= R.front()) return K.front() * std::pow(r / R.front(), -1.0 - 2.0 * k.s);
  auto it = std::upper_bound(R.begin(), R.end(), r);
  std::size_t j = static_cast<std::size_t>(it - R.begin());
  double t = (std::log(r) - std::log(R[j - 1])) / (std::log(R[j]) - std::log(R[j - 1]));
  return std::exp((1.0 - t) * std::log(K[j - 1]) + t * std::log(K[j]));
}

void check_table(const KernelSpec& k) {
  if (k.table_r.size() < 2 || k.table_r.size() != k.table_k.size())
    throw ConfigError("tabulated kernel needs matching radius/value tables with at least 2 entries");
  for (std::size_t i = 0; i < k.table_r.size(); ++i) {
    if (!(k.table_r[i] > 0.0) || !(k.table_k[i] > 0.0))
      throw ConfigError("tabulated kernel: radii and values must be positive");
    if (i > 0 && !(k.table_r[i] > k.table_r[i - 1]))
      throw ConfigError("tabulated kernel: radii must be strictly increasing");
  }
}

}  // namespace

KernelSpec resolve(const KernelSpec& in) {
  KernelSpec k = in;
  if (k.form == KernelForm::Tabulated) {
    check_table(k);
    double lo = INFINITY, hi = 0.0;
    const int N = 4000;
    for (int i = 0; i < N; ++i) {
      double r = 10.0 * std::pow(10.0, -8.0 * (1.0 - double(i) / (N - 1)));
      double q = tabulated_kernel(k, r) * std::pow(r, 1.0 + 2.0 * k.s);
      if (r <= k.r0) lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    if (std::isnan(k.theta0)) k.theta0 = lo;
    if (std::isnan(k.Theta0)) k.Theta0 = hi;
    return k;
  }
  if (std::isnan(k.c)) k.c = fractional_laplacian_constant(k.s);
  if (std::isnan(k.c_far)) k.c_far = (k.form == KernelForm::TruncatedPower) ? 0.5 * k.c : k.c;
  if (k.form == KernelForm::PowerLaw) k.c_far = k.c;
  if (std::isnan(k.theta0)) k.theta0 = k.c;
  if (std::isnan(k.Theta0)) k.Theta0 = std::max(k.c, k.c_far);
  return k;
}

double kernel_eval(const KernelSpec& k, double r) {
  if (r == 0.0) throw DomainError("kernel is singular at r = 0");
  r = std::fabs(r);
  switch (k.form) {
    case KernelForm::PowerLaw: {
      double c = std::isnan(k.c) ? fractional_laplacian_constant(k.s) : k.c;
      return c * std::pow(r, -1.0 - 2.0 * k.s);
    }
    case KernelForm::TruncatedPower: {
      double c = std::isnan(k.c) ? fractional_laplacian_constant(k.s) : k.c;
      double cf = std::isnan(k.c_far) ? 0.5 * c : k.c_far;
      return (r <= k.r0 ? c : cf) * std::pow(r, -1.0 - 2.0 * k.s);
    }
    case KernelForm::Tabulated:
      return tabulated_kernel(k, r);
  }
  return 0.0;
}

// ---------------------------------------------------------------- potential

double PotentialSpec::resolved_delta0() const {
  return std::isnan(delta0) ? 0.5 * std::fabs(zeta2 - zeta1) : delta0;
}

std::pair<double, double> potential_eval_grad(const PotentialSpec& p, double u) {
  double z1 = p.zeta1, z2 = p.zeta2, sign = 1.0;
  if (p.mirrored) {
    u = -u;
    z1 = -z1;
    z2 = -z2;
    sign = -1.0;
  }
  double sep = z2 - z1;
  double W = 0.0, dW = 0.0;
  switch (p.form) {
    case PotentialForm::Cosine: {
      double a = sep / (2.0 * kPi);
      double ph = kPi * (u - z1) / sep;
      double sn = std::sin(ph);
      W = 2.0 * a * a * sn * sn;
      dW = a * std::sin(2.0 * ph);
      break;
    }
    case PotentialForm::QuarticDoubleWell: {
      double p1 = u - z1, p2 = u - z2, s2 = sep * sep;
      W = p1 * p1 * p2 * p2 / (2.0 * s2);
      dW = p1 * p2 * (p1 + p2) / s2;
      break;
    }
    case PotentialForm::Tabulated:
      if (!p.table) throw ConfigError("tabulated potential without a table");
      W = p.table->value(u);
      dW = p.table->derivative(u);
      break;
  }
  return {W, sign * dW};
}

double potential_delta(const PotentialSpec& p, double u, double d) {
  double z1 = p.zeta1, z2 = p.zeta2;
  if (p.mirrored) {
    u = -u;
    d = -d;
    z1 = -z1;
    z2 = -z2;
  }
  double sep = z2 - z1;
  switch (p.form) {
    case PotentialForm::Cosine: {
      double a = sep / (2.0 * kPi);
      double ph = kPi * (u - z1) / sep, dp = kPi * d / sep;
      return 2.0 * a * a * std::sin(dp) * std::sin(2.0 * ph + dp);
    }
    case PotentialForm::QuarticDoubleWell: {
      double g0 = (u - z1) * (u - z2), g1 = (u + d - z1) * (u + d - z2);
      return d * (2.0 * u + d - z1 - z2) * (g0 + g1) / (2.0 * sep * sep);
    }
    case PotentialForm::Tabulated:
      break;
  }
  if (!p.table) throw ConfigError("tabulated potential without a table");
  return p.table->value(u + d) - p.table->value(u);
}

double potential_slope_bound(const PotentialSpec& p) {
  double lo = p.well_lo(), hi = p.well_hi(), m = 0.0;
  const int N = 4001;
  for (int i = 0; i < N; ++i) {
    double u = lo + (hi - lo) * i / (N - 1);
    m = std::max(m, std::fabs(potential_eval_grad(p, u).second));
  }
  return m;
}

double potential_curvature_bound(const PotentialSpec& p) {
  double lo = p.well_lo(), hi = p.well_hi(), m = 0.0;
  double d = (hi - lo) * 1e-5;
  const int N = 2001;
  for (int i = 0; i < N; ++i) {
    double u = lo + (hi - lo) * i / (N - 1);
    double a = std::max(lo, u - d), b = std::min(hi, u + d);
    double k = (potential_eval_grad(p, b).second - potential_eval_grad(p, a).second) / (b - a);
    m = std::max(m, std::fabs(k));
  }
  return m;
}

// ---------------------------------------------------------------- modulation

double modulation_eval(const ModulationSpec& m, double x) {
  switch (m.form) {
    case ModulationForm::Constant:
      return m.value;
    case ModulationForm::CosinePerturbation:
      return m.base + m.eps * std::cos(m.delta_freq * x);
    case ModulationForm::Tabulated:
      if (!m.table) throw ConfigError("tabulated modulation without a table");
      return m.table->value(std::clamp(x, m.table->x_min(), m.table->x_max()));
  }
  return 0.0;
}

namespace {

std::pair<double, double> tabulated_range(const TabulatedCurve& t) {
  double lo = INFINITY, hi = -INFINITY;
  const auto& xs = t.xs();
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (int j = 0; j < 16; ++j) {
      double v = t.value(xs[i] + (xs[i + 1] - xs[i]) * j / 16.0);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  lo = std::min(lo, t.ys().back());
  hi = std::max(hi, t.ys().back());
  return {lo, hi};
}

}  // namespace

double modulation_lower(const ModulationSpec& m) {
  if (!std::isnan(m.a_lower)) return m.a_lower;
  switch (m.form) {
    case ModulationForm::Constant: return m.value;
    case ModulationForm::CosinePerturbation: return m.base - std::fabs(m.eps);
    case ModulationForm::Tabulated: return tabulated_range(*m.table).first;
  }
  return kNaN;
}

double modulation_upper(const ModulationSpec& m) {
  if (!std::isnan(m.a_upper)) return m.a_upper;
  switch (m.form) {
    case ModulationForm::Constant: return m.value;
    case ModulationForm::CosinePerturbation: return m.base + std::fabs(m.eps);
    case ModulationForm::Tabulated: return tabulated_range(*m.table).second;
  }
  return kNaN;
}

// ---------------------------------------------------------------- reference profile

double ReferenceProfile::eval(double x) const {
  if (x <= -1.0) return zeta1;
  if (x >= 1.0) return zeta2;
  double t = 0.5 * (x + 1.0);
  double S = t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
  return zeta1 + (zeta2 - zeta1) * S;
}

double ReferenceProfile::derivative(double x) const {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  double t = 0.5 * (x + 1.0);
  double dS = 30.0 * t * t * (1.0 - t) * (1.0 - t);
  return 0.5 * (zeta2 - zeta1) * dS;
}

double ReferenceProfile::c1_norm() const {
  return std::max(std::fabs(zeta1), std::fabs(zeta2)) + 0.9375 * std::fabs(zeta2 - zeta1);
}

ProblemSpec reflect(const ProblemSpec& spec) {
  ProblemSpec r = spec;
  r.potential.zeta1 = -spec.potential.zeta1;
  r.potential.zeta2 = -spec.potential.zeta2;
  r.potential.mirrored = !spec.potential.mirrored;
  return r;
}

// ---------------------------------------------------------------- verify_model

bool ModelReport::all_pass() const {
  for (const auto& c : checks)
    if (c.applicable && !c.pass) return false;
  return true;
}

const HypothesisCheck* ModelReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

ModulationSpec resolve_modulation(const ModulationSpec& m0, bool* defaulted) {
  ModulationSpec m = m0;
  bool any = false;
  if (m.form == ModulationForm::CosinePerturbation) {
    double d = m.delta_freq;
    double peak = m.eps >= 0 ? 0.0 : kPi / d;
    if (std::isnan(m.m1)) m.m1 = peak, any = true;
    if (std::isnan(m.m2)) m.m2 = peak + 2.0 * kPi / d, any = true;
    if (std::isnan(m.omega)) m.omega = kPi / (4.0 * d), any = true;
    if (std::isnan(m.theta)) m.theta = kPi / d, any = true;
    if (std::isnan(m.gamma)) m.gamma = std::sqrt(2.0) * std::fabs(m.eps), any = true;
  } else if (m.form == ModulationForm::Constant && !std::isnan(m.gamma) && m.gamma > 0.0) {
    if (std::isnan(m.omega)) m.omega = 1.0, any = true;
    if (std::isnan(m.theta)) m.theta = 1.0, any = true;
    if (std::isnan(m.m1)) m.m1 = 0.0, any = true;
    if (std::isnan(m.m2)) m.m2 = m.m1 + 2.0 * m.omega + m.theta, any = true;
  }
  if (defaulted) *defaulted = any;
  return m;
}


namespace {

HypothesisCheck kernel_checks(const KernelSpec& k0, ModelReport& rep, int N) {
  HypothesisCheck rng{"kernel_exponent", "1/4 < s <= 1/2"};
  rng.measured = k0.s;
  rng.pass = k0.s > 0.25 && k0.s <= 0.5;
  rep.checks.push_back(rng);

  HypothesisCheck ell{"kernel_ellipticity", "theta0 chi_[0,r0] <= K |r|^{1+2s} <= Theta0"};
  HypothesisCheck ev{"kernel_even", "K(r) = K(-r)"};
  ev.pass = true;
  ev.measured = 0.0;
  KernelSpec k;
  try {
    k = resolve(k0);
  } catch (const Error& e) {
    ell.pass = false;
    ell.detail = e.what();
    rep.checks.push_back(ev);
    return ell;
  }
  if (std::isnan(k0.theta0)) rep.notes.push_back("kernel.theta0 defaulted to " + fmt(k.theta0));
  if (std::isnan(k0.Theta0)) rep.notes.push_back("kernel.Theta0 defaulted to " + fmt(k.Theta0));
  if (k0.form != KernelForm::Tabulated && std::isnan(k0.c))
    rep.notes.push_back("kernel.c defaulted to the fractional Laplacian normalization " + fmt(k.c));
  ell.pass = k.theta0 > 0.0 && k.Theta0 >= k.theta0;
  double worst = INFINITY;
  for (int i = 0; i < N; ++i) {
    double r = 10.0 * std::pow(10.0, -8.0 * (1.0 - double(i) / (N - 1)));
    double Kp = kernel_eval(k, r), Km = kernel_eval(k, -r);
    if (Kp != Km) {
      ev.pass = false;
      ev.measured = std::max(ev.measured, std::fabs(Kp - Km));
      ev.worst_at = r;
    }
    double q = Kp * std::pow(r, 1.0 + 2.0 * k.s);
    double lower = r <= k.r0 ? k.theta0 : 0.0;
    double m = std::min((q - lower * (1 - 1e-12)), (k.Theta0 * (1 + 1e-12) - q)) / k.Theta0;
    if (m < worst) {
      worst = m;
      ell.worst_at = r;
    }
  }
  ell.measured = worst;
  ell.bound = 0.0;
  if (worst < 0.0) ell.pass = false;
  rep.checks.push_back(ev);
  return ell;
}

void potential_checks(const PotentialSpec& p, ModelReport& rep, int N) {
  double d0 = p.resolved_delta0();
  if (std::isnan(p.delta0)) rep.notes.push_back("potential.delta0 defaulted to half the well separation " + fmt(d0));
  double z[2] = {p.zeta1, p.zeta2};

  HypothesisCheck wells{"potential_wells", "W(zeta1) = W(zeta2) = 0, W > 0 between"};
  try {
    double wz = std::max(std::fabs(potential_eval_grad(p, z[0]).first), std::fabs(potential_eval_grad(p, z[1]).first));
    double minw = INFINITY, at = kNaN;
    for (int i = 1; i < N - 1; ++i) {
      double u = p.well_lo() + (p.well_hi() - p.well_lo()) * i / (N - 1);
      double w = potential_eval_grad(p, u).first;
      if (w < minw) {
        minw = w;
        at = u;
      }
    }
    wells.measured = minw;
    wells.worst_at = at;
    wells.pass = p.zeta1 != p.zeta2 && wz <= 1e-12 && minw > 0.0;
    wells.detail = "max |W(zeta)| = " + fmt(wz);
  } catch (const Error& e) {
    wells.pass = false;
    wells.detail = e.what();
  }
  rep.checks.push_back(wells);

  HypothesisCheck grow{"potential_growth", "c0 xi^2 <= W(zeta + xi) <= C0 xi^2 for |xi| <= delta0"};
  HypothesisCheck mono{"potential_monotone", "sign W'(zeta +- xi) = +-1 for 0 < xi < delta0"};
  try {
    double lo = INFINITY, hi = 0.0, lo_at = kNaN, hi_at = kNaN;
    double mono_worst = INFINITY, mono_at = kNaN;
    for (double zeta : z)
      for (int sgn : {-1, 1})
        for (int i = 1; i <= N / 4; ++i) {
          double xi = d0 * double(i) / (N / 4);
          double u = zeta + sgn * xi;
          auto [W, dW] = potential_eval_grad(p, u);
          double q = W / (xi * xi);
          if (q < lo) {
            lo = q;
            lo_at = u;
          }
          if (q > hi) {
            hi = q;
            hi_at = u;
          }
          if (i < N / 4) {
            double m = sgn * dW;
            if (m < mono_worst) {
              mono_worst = m;
              mono_at = u;
            }
          }
        }
    double c0 = p.c0, C0 = p.C0_growth;
    if (std::isnan(c0)) {
      c0 = lo;
      rep.notes.push_back("potential.c0 defaulted to measured " + fmt(c0));
    }
    if (std::isnan(C0)) {
      C0 = hi;
      rep.notes.push_back("potential.C0 defaulted to measured " + fmt(C0));
    }
    grow.pass = c0 > 0.0 && lo >= c0 * (1 - 1e-9) && hi <= C0 * (1 + 1e-9);
    grow.measured = lo;
    grow.bound = c0;
    grow.worst_at = lo < c0 * (1 - 1e-9) ? lo_at : hi_at;
    grow.detail = "ratio range [" + fmt(lo) + ", " + fmt(hi) + "] vs [" + fmt(c0) + ", " + fmt(C0) + "]";
    mono.measured = mono_worst;
    mono.worst_at = mono_at;
    mono.pass = mono_worst > 0.0;
  } catch (const Error& e) {
    grow.pass = mono.pass = false;
    grow.detail = mono.detail = e.what();
  }
  rep.checks.push_back(grow);
  rep.checks.push_back(mono);
}

// min over x in [m - w, m + w] and both signs of a(x) - a(x +- theta), sampled and refined.
std::pair<double, double> nondegeneracy_margin(const ModulationSpec& m, double center, double w, double th, int N) {
  double best = INFINITY, at = kNaN;
  auto f = [&](double x) {
    return std::min(modulation_eval(m, x) - modulation_eval(m, x + th), modulation_eval(m, x) - modulation_eval(m, x - th));
  };
  for (int i = 0; i < N; ++i) {
    double x = center - w + 2.0 * w * i / (N - 1);
    double v = f(x);
    if (v < best) {
      best = v;
      at = x;
    }
  }
  double step = 2.0 * w / (N - 1);
  double a = std::max(center - w, at - step), b = std::min(center + w, at + step);
  if (b > a) {
    auto r = boost::math::tools::brent_find_minima(f, a, b, 52);
    if (r.second < best) {
      best = r.second;
      at = r.first;
    }
  }
  return {best, at};
}

void modulation_checks(const ModulationSpec& m0, ModelReport& rep, int N, double window) {
  ModulationSpec m = m0;
  HypothesisCheck range{"modulation_range", "0 < a_lower <= a(x) <= a_upper"};
  double lo = modulation_lower(m), hi = modulation_upper(m);
  if (std::isnan(m0.a_lower)) rep.notes.push_back("modulation.a_lower defaulted to " + fmt(lo));
  if (std::isnan(m0.a_upper)) rep.notes.push_back("modulation.a_upper defaulted to " + fmt(hi));

  bool any = false;
  m = resolve_modulation(m0, &any);
  if (any && m.form == ModulationForm::CosinePerturbation)
    rep.notes.push_back("modulation nondegeneracy parameters defaulted to the slow cosine perturbation choice");

  double lo_m = m.m1 - m.omega - m.theta - 1.0, hi_m = m.m2 + m.omega + m.theta + 1.0;
  double xa = -window, xb = window;
  if (!std::isnan(lo_m)) xa = std::min(xa, lo_m);
  if (!std::isnan(hi_m)) xb = std::max(xb, hi_m);
  double amin = INFINITY, amax = -INFINITY, amin_at = kNaN, amax_at = kNaN;
  for (int i = 0; i < N; ++i) {
    double x = xa + (xb - xa) * i / (N - 1);
    double a = modulation_eval(m, x);
    if (a < amin) amin = a, amin_at = x;
    if (a > amax) amax = a, amax_at = x;
  }
  range.pass = lo > 0.0 && amin >= lo - 1e-12 && amax <= hi + 1e-12;
  range.measured = amin;
  range.bound = lo;
  range.worst_at = (amin < lo - 1e-12 || lo <= 0.0) ? amin_at : amax_at;
  range.detail = "sampled range [" + fmt(amin) + ", " + fmt(amax) + "]";
  rep.checks.push_back(range);

  bool homogeneous = m.form == ModulationForm::Constant && (std::isnan(m.gamma) || m.gamma == 0.0);
  HypothesisCheck sep{"modulation_separation", "m2 - m1 >= 2 omega + theta"};
  HypothesisCheck nd{"a_nondegenerate", "a nondegenerate: a(x) - a(x +- theta) >= gamma near m1, m2"};
  if (homogeneous) {
    sep.applicable = nd.applicable = false;
    sep.detail = nd.detail = "n/a (homogeneous modulation)";
    rep.checks.push_back(sep);
    rep.checks.push_back(nd);
    return;
  }
  if (std::isnan(m.m1) || std::isnan(m.m2) || std::isnan(m.omega) || std::isnan(m.theta) || std::isnan(m.gamma)) {
    sep.pass = nd.pass = false;
    sep.detail = nd.detail = "parameters m1, m2, omega, theta, gamma not declared";
    rep.checks.push_back(sep);
    rep.checks.push_back(nd);
    return;
  }
  sep.measured = (m.m2 - m.m1) - (2.0 * m.omega + m.theta);
  sep.bound = 0.0;
  sep.pass = sep.measured >= -1e-12 && m.omega >= 0.0 && m.theta > 0.0;
  rep.checks.push_back(sep);

  auto r1 = nondegeneracy_margin(m, m.m1, m.omega, m.theta, N);
  auto r2 = nondegeneracy_margin(m, m.m2, m.omega, m.theta, N);
  auto w = r1.first <= r2.first ? r1 : r2;
  nd.measured = w.first;
  nd.worst_at = w.second;
  nd.bound = m.gamma;
  nd.pass = m.gamma > 0.0 && w.first >= m.gamma - 1e-9;
  nd.detail = "worst margin " + fmt(w.first) + " vs gamma " + fmt(m.gamma);
  rep.checks.push_back(nd);
}

}  // namespace

ModelReport verify_model(const ProblemSpec& spec, int sample_count, double x_window) {
  if (sample_count < 100) throw PreconditionError("verify_model: sample_count must be >= 100");
  ModelReport rep;
  rep.checks.push_back(kernel_checks(spec.kernel, rep, sample_count));
  potential_checks(spec.potential, rep, sample_count);
  modulation_checks(spec.modulation, rep, sample_count, x_window);
  if (spec.potential.form == PotentialForm::Cosine) rep.notes.push_back("potential form: cosine (default choice)");
  return rep;
}

}  // namespace nlhet
