#pragma once

#include <string>
#include <vector>

#include "nlhet/discretize.hpp"
#include "nlhet/model.hpp"

namespace nlhet {

// User-facing obstacle inputs; NaN means "use the default".
struct ObstacleParams {
  double b1 = kNaN;
  double b2 = kNaN;
  double tau = 0.05;
  double r = kNaN;
};

struct ObstacleConfig {
  double b1 = -1.0;
  double b2 = 1.0;
  double tau = 0.05;
  double r = 0.5;
  double C0_rhs = 1.0;  // ||a W'||_inf + 2|zeta1| + 2|zeta2| + 1
  double zeta1 = 0.0;
  double zeta2 = 2.0 * kPi;
};

// Resolves defaults and validates b1 <= -1, b2 >= 1, 0 < tau < 1, 0 < r <= min(delta0, r0).
ObstacleConfig make_obstacle_config(const ProblemSpec& spec, const ObstacleParams& params,
                                    std::vector<std::string>* notes = nullptr);

struct BarrierSolve {
  Profile u;
  double residual = 0.0;  // max |A u - b| on the barrier domain
  double rcond = 0.0;     // reciprocal condition estimate
};

// (-eta D2 + L) u = sign C0 on (b1 - tau, b2 + tau), exterior data zeta_i + sign r.
Profile solve_barrier(const ProblemSpec& spec, const ObstacleConfig& cfg, const Grid& grid, double eta, int sign);
// Both barriers from one factorization: first = phi (sign +1), second = psi (sign -1).
std::pair<BarrierSolve, BarrierSolve> solve_barriers(const ProblemSpec& spec, const ObstacleConfig& cfg, const Grid& grid,
                                                     double eta);

struct ObstaclePair {
  Profile phi, psi, Phi, Psi;
};

ObstaclePair build_envelopes(const Profile& phi, const Profile& psi, const ObstacleConfig& cfg);
// Throws ConstructionError naming the first failed clause and node.
void verify_envelopes(const ObstaclePair& pair, const ObstacleConfig& cfg);

// Deviation of the barriers from their exterior data next to b1, b2 (required <= r/4).
struct BandReport {
  double phi_left = 0.0, phi_right = 0.0, psi_left = 0.0, psi_right = 0.0;
  double limit = 0.0;
  bool pass = false;
};
BandReport check_barrier_band(const Profile& phi, const Profile& psi, const ObstacleConfig& cfg);

enum class ProjectionMode { GammaOnly, SigmaFull };

// Node is in the constrained region (-inf, b1] u [b2, inf).
bool constrained_node(const ObstacleConfig& cfg, double x);

Profile project_admissible(const Profile& q, const ObstaclePair& pair, const ObstacleConfig& cfg, ProjectionMode mode);

}  // namespace nlhet
