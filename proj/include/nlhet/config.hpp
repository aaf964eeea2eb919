#pragma once

#include <string>
#include <vector>

#include "nlhet/appendix_bench.hpp"
#include "nlhet/discretize.hpp"
#include "nlhet/model.hpp"
#include "nlhet/obstacles.hpp"
#include "nlhet/solver.hpp"

namespace nlhet {

struct DiagnosticsConfig {
  double rho = 0.05;               // clean-interval scan
  double stickiness_rho = 0.015;   // clean points used for stickiness pairs
  double stickiness_tol = 1e-2;
  double x1 = kNaN, x2 = kNaN;     // explicit stickiness pair (both or neither)
  int stickiness_samples = 10;     // clean points sampled per interval otherwise
  double ls_eta = 0.0, ls_mu = 0.0;
  std::vector<Interval> ls_intervals;  // empty: a default set scaled to the window
  double holder_alpha = kNaN;      // default s
};

struct RunConfig {
  ProblemSpec spec;
  double grid_R = 200.0;
  std::size_t grid_n = 0;  // 0: derived from grid_h
  double grid_h = 0.05;
  ObstacleParams obstacles;
  SolverConfig solver;
  ContinuationSchedule schedule;
  DiagnosticsConfig diagnostics;
  BenchConfig bench;

  Grid grid() const;
};

// TOML text -> config. Syntax errors raise ParseError with line and column;
// unknown keys and invalid values raise ParseError at the offending key.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

// Deterministic key = value rendering of every resolved field (digest input).
std::string canonical_config(const RunConfig& c);

}  // namespace nlhet
