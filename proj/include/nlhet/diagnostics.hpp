#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nlhet/discretize.hpp"
#include "nlhet/model.hpp"
#include "nlhet/obstacles.hpp"

namespace nlhet {

struct CleanInterval {
  double lo = 0.0, hi = 0.0;  // closed, node coordinates
  std::size_t first = 0, last = 0;
  double well = 0.0;
  double sup_deviation = 0.0;
  double center() const { return 0.5 * (lo + hi); }
};

struct CleanIntervalReport {
  double rho = 0.0;
  double min_length = 0.0;  // |log rho|
  std::vector<CleanInterval> intervals;  // leftmost first
  std::vector<double> clean_points;      // interval centers
};

// Maximal node runs inside search on which some well stays within rho, of length >= |log rho|.
CleanIntervalReport find_clean_intervals(const Profile& q, double rho, const std::vector<double>& wells,
                                         const Interval& search = Interval::line());

// x is the center of a (rho, q)-clean interval for zeta.
bool is_clean_point(const Profile& q, double x, double rho, double zeta);

struct StickinessReport {
  double x1 = 0.0, x2 = 0.0, well = 0.0;
  double viscous = 0.0, penalty = 0.0, interaction = 0.0, potential = 0.0;
  double localized_energy = 0.0;
  double sup_dev = 0.0;
  double r = 0.0, tol = 0.0;
  bool pass = false;
};

// Requires x2 >= x1 + 4 and x1, x2 clean points (rho) for a common well.
StickinessReport stickiness_check(const Profile& q, double x1, double x2, const ProblemSpec& spec, double eta, double mu,
                                  double rho, double r, double tol = 1e-2);

struct StickinessSweep {
  std::vector<double> points;  // sampled clean points, ascending
  std::vector<StickinessReport> pairs;
  double worst_energy = 0.0, worst_dev = 0.0;
  bool pass = false;  // every pair passes (vacuous without pairs)
};

// Samples up to per_interval clean points (rho) inside each clean interval and
// checks every same-well pair with x2 >= x1 + 4.
StickinessSweep stickiness_sweep(const Profile& q, const ProblemSpec& spec, double eta, double mu, double rho, double r,
                                 double tol, int per_interval);

struct LSReport {
  Interval I;
  double lower = 0.0, upper = 0.0;  // bounds of the two-sided inequality
  double value_min = 0.0, value_max = 0.0;
  double slack = 0.0;
  double worst_violation = 0.0;  // > 0 means failure by that much beyond slack
  double worst_at = kNaN;
  std::size_t nodes = 0;
  bool pass = false;
};

// slack NaN: 2e-8 n / h (twice the solver's default stationarity budget).
LSReport lewy_stampacchia_check(const Profile& q, const ObstaclePair& pair, const ProblemSpec& spec, double eta,
                                double mu, const Interval& I, double slack = kNaN);

// max over node pairs in I (|x - y| >= h) of |Q(x) - Q(y)| / |x - y|^alpha; requires 0 < alpha < 2s.
double holder_estimate(const Profile& q, const Interval& I, double alpha, double s);
// Shape of the clean-interval Holder bound (the estimate divided by this is the reported constant).
double holder_clean_shape(double rho, double alpha, double s, double mu);

// Q left of x0 (rounded to a node), linear to zeta on [x0, x0 + 1], zeta beyond.
Profile glue_profile(const Profile& q, double x0, double zeta, double beta);

// |E_{(T1,T2)^2}(P) - E_{(T1,x0)^2}(Q) - E_{(x0,T2)^2}(P) + 2 [Q#]^2_{(x0-beta,x0)x(x0,x0+beta)}|
double gluing_energy_defect(const Profile& q, const Profile& p, const Profile& qsharp, double x0, double beta, double T1,
                            double T2, const KernelSpec& kernel);

enum class Side { Left, Right };

struct TailFit {
  Side side = Side::Right;
  double fitted_exponent = 0.0;
  double fitted_constant = 0.0;
  double r_squared = 0.0;
  std::vector<double> x, log_abs_dev;  // fit data
};

// Least squares of log|Q - zeta| on log|x| over the outer quarter, last 5 nodes excluded.
TailFit fit_tail_decay(const Profile& q, Side side);

// Largest drop against the orientation zeta1 -> zeta2 (0 for a monotone profile).
double monotonicity_defect(const Profile& q);

// sup |Q - zeta| over [x, edge] for the nodes x of one half, listed from the center toward the edge.
std::vector<double> tail_envelope(const Profile& q, Side side);

struct ShiftFit {
  double shift = 0.0;
  double linf = 0.0;  // sup over nodes of |Q(x) - f(x - shift)|, window ends excluded
};

// Best translate of f in [lo, hi]: scan at step h then golden-section refinement.
ShiftFit best_shift_fit(const Profile& q, const std::function<double(double)>& f, double lo, double hi);

}  // namespace nlhet
