#include "nlhet/energy.hpp"

#include <cmath>

#include "nlhet/errors.hpp"

namespace nlhet {

namespace {

bool same_far_fields(const Profile& a, const Profile& b) {
  double scale = 1.0 + std::fabs(a.left_const) + std::fabs(a.right_const);
  return std::fabs(a.left_const - b.left_const) <= 1e-12 * scale &&
         std::fabs(a.right_const - b.right_const) <= 1e-12 * scale;
}

}  // namespace

Profile difference(const Profile& q, const Profile& qs) {
  if (q.grid != qs.grid) throw DomainError("profiles live on different grids");
  Profile v{q.grid, std::vector<double>(q.size()), q.left_const - qs.left_const, q.right_const - qs.right_const};
  for (std::size_t i = 0; i < q.size(); ++i) v.values[i] = q.values[i] - qs.values[i];
  return v;
}

EnergyModel::EnergyModel(const ProblemSpec& spec, const Grid& grid)
    : EnergyModel(spec, grid, make_reference(grid, spec.reference())) {}

EnergyModel::EnergyModel(const ProblemSpec& spec, const Grid& grid, const Profile& qsharp)
    : spec_(spec), grid_(grid), qs_(qsharp) {
  if (qsharp.grid != grid) throw DomainError("reference profile grid mismatch");
  op_ = std::make_unique<NonlocalOperator>(spec.kernel, grid, default_tail(spec.kernel));
  Lqs_ = op_->apply(qs_);
  const std::size_t n = grid.n;
  const double h = grid.h();
  a_.resize(n);
  wq_.assign(n, h);
  wq_.front() = wq_.back() = 0.5 * h;
  for (std::size_t i = 0; i < n; ++i) a_[i] = modulation_eval(spec.modulation, grid.x(std::int64_t(i)));
}

void EnergyModel::check(const Profile& q) const {
  if (q.grid != grid_) throw DomainError("profile grid does not match the energy model");
  if (!same_far_fields(q, qs_)) throw DomainError("far fields differ from the reference profile; renormalization invalid");
}

Field EnergyModel::nonlocal(const Profile& q) const {
  check(q);
  const std::size_t n = grid_.n;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = q.values[i] - qs_.values[i];
  Field L(n);
  op_->apply_zero_far(v.data(), L.data());
  for (std::size_t i = 0; i < n; ++i) L[i] += Lqs_[i];
  return L;
}

EnergyBreakdown EnergyModel::energy(const Profile& q, const Field& Lq, double eta, double mu) const {
  check(q);
  const std::size_t n = grid_.n;
  const double h = grid_.h();
  EnergyBreakdown e;
  double vis = 0.0;
  double d0 = q.values[0] - q.left_const, dn = q.right_const - q.values[n - 1];
  vis += d0 * d0 + dn * dn;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    double d = q.values[i + 1] - q.values[i];
    vis += d * d;
  }
  e.viscous = 0.5 * eta * vis / h;
  double pen = 0.0, pot = 0.0, inter = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = q.values[i] - qs_.values[i];
    pen += wq_[i] * v * v;
    pot += wq_[i] * a_[i] * potential_eval_grad(spec_.potential, q.values[i]).first;
    inter += v * (Lq[i] + Lqs_[i]);
  }
  e.penalty = 0.5 * mu * pen;
  e.potential = pot;
  e.interaction = 0.5 * h * inter;
  e.sum();
  return e;
}

Field EnergyModel::gradient(const Profile& q, const Field& Lq, double eta, double mu) const {
  check(q);
  const std::size_t n = grid_.n;
  const double h = grid_.h();
  Field g(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double qi = q.values[i];
    g[i] = eta * (2.0 * qi - q.values[i - 1] - q.values[i + 1]) / h + h * mu * (qi - qs_.values[i]) + h * Lq[i] +
           h * a_[i] * potential_eval_grad(spec_.potential, qi).second;
  }
  return g;
}

double renormalized_interaction(const Profile& q, const Profile& qs, const LatticeKernel& lat, const Interval& I,
                                const Interval& J) {
  if (q.grid != qs.grid) throw DomainError("renormalized_interaction: grid mismatch");
  if (!same_far_fields(q, qs)) throw DomainError("renormalized_interaction: far fields differ; renormalization invalid");
  Profile v = difference(q, qs);
  return bilinear_form(v, v, I, J, lat) + 2.0 * bilinear_form(v, qs, I, J, lat);
}

double renormalized_interaction(const Profile& q, const Profile& qs, const KernelSpec& spec, const Interval& I,
                                const Interval& J) {
  LatticeKernel lat(spec, q.grid.h(), q.grid.n, default_tail(spec));
  return renormalized_interaction(q, qs, lat, I, J);
}

EnergyBreakdown total_energy(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qs) {
  if (eta < 0.0 || mu < 0.0) throw DomainError("total_energy: eta and mu must be nonnegative");
  EnergyModel m(spec, q.grid, qs);
  return m.energy(q, eta, mu);
}

Field energy_gradient(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qs) {
  if (eta < 0.0 || mu < 0.0) throw DomainError("energy_gradient: eta and mu must be nonnegative");
  EnergyModel m(spec, q.grid, qs);
  return m.gradient(q, eta, mu);
}

}  // namespace nlhet
