#pragma once

#include <memory>

#include "nlhet/discretize.hpp"
#include "nlhet/model.hpp"

namespace nlhet {

struct EnergyBreakdown {
  double viscous = 0.0;
  double penalty = 0.0;
  double potential = 0.0;
  double interaction = 0.0;
  double total = 0.0;
  void sum() { total = viscous + penalty + potential + interaction; }
};

// Cached evaluator of the perturbed functional on one grid.
class EnergyModel {
 public:
  EnergyModel(const ProblemSpec& spec, const Grid& grid);
  EnergyModel(const ProblemSpec& spec, const Grid& grid, const Profile& qsharp);

  const ProblemSpec& spec() const { return spec_; }
  const Grid& grid() const { return grid_; }
  const Profile& qsharp() const { return qs_; }
  const NonlocalOperator& op() const { return *op_; }
  const Field& L_qsharp() const { return Lqs_; }
  // a(x_i) and trapezoid weights (1/2 at the ends, times h)
  const std::vector<double>& a() const { return a_; }
  const std::vector<double>& quad_weights() const { return wq_; }

  // LQ for a profile sharing the far fields of qsharp.
  Field nonlocal(const Profile& q) const;
  EnergyBreakdown energy(const Profile& q, const Field& Lq, double eta, double mu) const;
  EnergyBreakdown energy(const Profile& q, double eta, double mu) const { return energy(q, nonlocal(q), eta, mu); }
  // dI/dQ_i on interior nodes (0 at the two boundary nodes).
  Field gradient(const Profile& q, const Field& Lq, double eta, double mu) const;
  Field gradient(const Profile& q, double eta, double mu) const { return gradient(q, nonlocal(q), eta, mu); }

 private:
  void check(const Profile& q) const;
  ProblemSpec spec_;
  Grid grid_;
  Profile qs_;
  std::unique_ptr<NonlocalOperator> op_;
  Field Lqs_;
  std::vector<double> a_, wq_;
};

// E_{IxJ}(Q) = [v]^2_{IxJ} + 2 B_{IxJ}(v, Q#), v = Q - Q#.
double renormalized_interaction(const Profile& q, const Profile& qsharp, const KernelSpec& spec, const Interval& I,
                                const Interval& J);
double renormalized_interaction(const Profile& q, const Profile& qsharp, const LatticeKernel& lat, const Interval& I,
                                const Interval& J);

EnergyBreakdown total_energy(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qsharp);
Field energy_gradient(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qsharp);

// v = q - qsharp with zero far fields.
Profile difference(const Profile& q, const Profile& qsharp);

}  // namespace nlhet
