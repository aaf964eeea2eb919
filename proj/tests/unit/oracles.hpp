#pragma once
// Independent reference computations used by the tests (adaptive quadrature,
// no lattice sums).

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using Fn = std::function<double(double)>;

inline double gk(const Fn& f, double a, double b) {
  if (b <= a) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-12);
}

// gk over [a, b] split at the given break points
inline double gk_split(const Fn& f, double a, double b, std::vector<double> breaks) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    double lo = std::max(a, breaks[i]), hi = std::min(b, breaks[i + 1]);
    if (hi > lo) s += gk(f, lo, hi);
  }
  return s;
}

// P.V. int (q(x) - q(y)) c |x-y|^{-1-2s} dy for q equal to `left` below -R and `right` above R.
inline double nonlocal(const Fn& q, double x, double R, double left, double right, double c, double s) {
  auto Q = [&](double y) { return y < -R ? left : (y > R ? right : q(y)); };
  auto f = [&](double t) { return (2.0 * Q(x) - Q(x + t) - Q(x - t)) * c * std::pow(t, -1.0 - 2.0 * s); };
  double T = R + std::fabs(x);
  double body = gk_split(f, 0.0, T, {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, R - std::fabs(x)});
  // beyond T both shifted samples are far-field constants
  double tail = (2.0 * Q(x) - left - right) * c * std::pow(T, -2.0 * s) / (2.0 * s);
  return body + tail;
}

// int_X int_Y (q(x) - q(y))^2 c |x-y|^{-1-2s} with X = Y = [a, b]; q smooth with kinks at the breaks.
inline double seminorm_sq_box(const Fn& q, double a, double b, double c, double s, std::vector<double> kinks) {
  auto inner = [&](double x) {
    auto g = [&](double t) {
      if (t == 0.0) return 0.0;
      double d = q(x + t) - q(x);
      return d * d * c * std::pow(std::fabs(t), -1.0 - 2.0 * s);
    };
    std::vector<double> br{0.0};
    for (double k : kinks) br.push_back(k - x);
    return gk_split(g, a - x, b - x, br);
  };
  return gk_split(inner, a, b, kinks);
}

inline double polyval_smoothstep(double t) { return 6 * std::pow(t, 5) - 15 * std::pow(t, 4) + 10 * std::pow(t, 3); }

// Maximal clean runs by exhaustive pair enumeration: (first, last, well) with every node in
// [first, last] within rho of the well, neither end extendable, and x_last - x_first >= min_len.
struct Run {
  std::size_t first, last;
  double well;
  bool operator==(const Run& o) const { return first == o.first && last == o.last && well == o.well; }
};

inline std::vector<Run> clean_runs_brute(const std::vector<double>& v, double h, double rho,
                                         const std::vector<double>& wells, double min_len) {
  const std::size_t n = v.size();
  std::vector<Run> out;
  for (double z : wells) {
    std::vector<std::size_t> bad(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) bad[i + 1] = bad[i] + (std::fabs(v[i] - z) > rho ? 1 : 0);
    auto ok = [&](std::size_t i, std::size_t j) { return bad[j + 1] == bad[i]; };
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        if (!ok(i, j)) break;
        bool maximal = (i == 0 || !ok(i - 1, j)) && (j + 1 == n || !ok(i, j + 1));
        if (maximal && double(j - i) * h >= min_len - 1e-9 * h) out.push_back({i, j, z});
      }
  }
  std::sort(out.begin(), out.end(), [](const Run& a, const Run& b) { return a.first < b.first; });
  return out;
}

}  // namespace oracle
