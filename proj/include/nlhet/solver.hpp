#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "nlhet/discretize.hpp"
#include "nlhet/energy.hpp"
#include "nlhet/model.hpp"
#include "nlhet/obstacles.hpp"

namespace nlhet {

enum class StepRule { BacktrackingArmijo, FixedStep };

struct SolverConfig {
  int max_iters = 200000;
  double grad_tol = kNaN;  // sup norm of the projected gradient; default 1e-8 n
  StepRule step_rule = StepRule::BacktrackingArmijo;
  double c1 = 1e-4;
  double shrink = 0.5;
  double fixed_step = 1.0;
  // an accepted step must lower the energy by at least this much
  double energy_decrease_min = 0.0;
  int refresh_every = 64;  // recompute LQ from scratch every so many steps
  bool keep_trace = true;

  double resolved_grad_tol(std::size_t n) const { return std::isnan(grad_tol) ? 1e-8 * double(n) : grad_tol; }
  void validate() const;
};

struct ContinuationSchedule {
  std::vector<double> eta_seq{1e-1, 1e-2, 1e-3};
  std::vector<double> mu_seq{0.1, 0.02, 0.005};
  bool warm_start = true;
  // Positive parts must be strictly decreasing; a trailing 0 is accepted and ignored
  // (the eta = 0 and mu = 0 stages always run).
  void validate() const;
  std::vector<double> positive_eta() const;
  std::vector<double> positive_mu() const;
};

struct ContactReport {
  std::vector<std::size_t> upper;  // Q = Phi
  std::vector<std::size_t> lower;  // Q = Psi
  std::size_t count() const { return upper.size() + lower.size(); }
  bool empty() const { return count() == 0; }
};

struct TracePoint {
  int iter = 0;  // accepted steps within the stage
  EnergyBreakdown energy;
  double grad_norm = 0.0;
};

struct StageRecord {
  std::size_t index = 0;  // position in the continuation order
  std::string label;
  double eta = 0.0, mu = 0.0;
  int iterations = 0;
  double energy_start = 0.0, energy_end = 0.0;
  double grad_norm = 0.0;
  bool converged = false;
  bool obstacles = false;
  BandReport band;
  std::size_t contacts = 0;
  std::vector<double> energies;  // energy after every accepted step, starting value first
  std::vector<TracePoint> points;  // same steps with the term breakdown
};

struct LimitCheck {
  double tol = 0.0;
  double left_dev = 0.0, right_dev = 0.0;           // outer quarter sup |Q - zeta|
  double left_outer = 0.0, left_inner = 0.0;        // outer / inner half of the left quarter
  double right_outer = 0.0, right_inner = 0.0;
  bool left_pass = false, right_pass = false;
  bool pass() const { return left_pass && right_pass; }
};

struct SolveResult {
  Profile profile;
  EnergyBreakdown breakdown;
  double residual_max = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  ContactReport contact;
  std::vector<StageRecord> trace;
  bool flipped = false;
  LimitCheck limit;
  std::vector<std::string> notes;
};

// Node-wise clamp into the well interval.
Profile truncate_to_wells(const Profile& q, const PotentialSpec& p);

// Projected gradient descent on the perturbed functional over the box
// [well_lo, well_hi] intersected with [Psi, Phi] on the constrained region.
// pair may be null (well clamp only). eta, mu >= 0.
SolveResult minimize_constrained(const Profile& q0, const ProblemSpec& spec, const ObstaclePair* pair,
                                 const ObstacleConfig& cfg, double eta, double mu, const SolverConfig& scfg,
                                 const std::string& label = "stage");

// Contact nodes of q with the envelopes on the constrained region.
ContactReport contact_report(const Profile& q, const ObstaclePair& pair, const ObstacleConfig& cfg, double tol = 1e-12);

// sup |LQ + a W'(Q)| over interior nodes inside obs (whole line by default).
std::pair<double, Field> residual_EL(const Profile& q, const ProblemSpec& spec, const Interval& obs = Interval::line());

LimitCheck far_field_limit_check(const Profile& q, const ProblemSpec& spec);

struct ContinuationOptions {
  ObstacleParams obstacles;
  ContinuationSchedule schedule;
  SolverConfig solver;
  // called after every stage with the stage profile (caller orientation)
  std::function<void(const StageRecord&, const Profile&)> on_stage;
  // stages with index below this are taken as done; the start profile is their result
  std::size_t skip_stages = 0;
};

// Number of stages continuation_run performs for a schedule (the final polish included).
std::size_t stage_count(const ContinuationSchedule& s);

// Outer loop over mu, inner loop over eta, eta = 0 stage per mu, then the
// final mu = 0, eta = 0 polish. Throws ConvergenceError if the far-field
// limit check fails.
SolveResult continuation_run(const ProblemSpec& spec, const Grid& grid, const ContinuationOptions& opt);
// Same, starting from q0 (resume).
SolveResult continuation_run(const ProblemSpec& spec, const Profile& q0, const ContinuationOptions& opt);

struct AprioriReport {
  double h1 = 0.0, k_seminorm = 0.0, linf = 0.0, l2 = 0.0, energy_plane = 0.0;
  // kappa implied by each bound
  double kappa_h1 = kNaN, kappa_k = kNaN, kappa_linf = kNaN, kappa_l2 = kNaN, kappa_energy = kNaN;
  bool well_sandwich = false;
  bool linf_bound = false;
  bool flagged = false;  // some implied kappa > 1e6
};

AprioriReport verify_apriori_bounds(const SolveResult& r, const ProblemSpec& spec, double eta, double mu);

}  // namespace nlhet
