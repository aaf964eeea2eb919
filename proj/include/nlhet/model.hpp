#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace nlhet {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kPi = 3.14159265358979323846;

// Monotone-in-x sample table with a modified Akima interpolant.
class TabulatedCurve {
 public:
  static std::shared_ptr<const TabulatedCurve> make(std::vector<double> x, std::vector<double> y);
  double value(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& xs() const { return x_; }
  const std::vector<double>& ys() const { return y_; }

 private:
  TabulatedCurve() = default;
  std::vector<double> x_, y_;
  std::shared_ptr<void> interp_;
};

enum class KernelForm { PowerLaw, TruncatedPower, Tabulated };

// Even kernel K(r). Unset (NaN) constants are resolved by resolve().
struct KernelSpec {
  KernelForm form = KernelForm::PowerLaw;
  double s = 0.5;
  double c = kNaN;      // coefficient of |r|^{-1-2s}; default: fractional Laplacian constant
  double c_far = kNaN;  // TruncatedPower coefficient beyond r0; default c/2
  double theta0 = kNaN;
  double Theta0 = kNaN;
  double r0 = 1.0;
  // Tabulated: K at ascending radii r > 0, interpolated log-log, zero beyond the last radius.
  std::vector<double> table_r, table_k;
};

// Constant C(1,s) making c|r|^{-1-2s} the kernel of (-Delta)^s; equals 1/pi at s = 1/2.
double fractional_laplacian_constant(double s);

KernelSpec resolve(const KernelSpec& k);
double kernel_eval(const KernelSpec& k, double r);

enum class PotentialForm { Cosine, QuarticDoubleWell, Tabulated };

struct PotentialSpec {
  PotentialForm form = PotentialForm::Cosine;
  double zeta1 = 0.0;
  double zeta2 = 2.0 * kPi;
  double c0 = kNaN;
  double C0_growth = kNaN;
  double delta0 = kNaN;  // default: half the well separation
  std::shared_ptr<const TabulatedCurve> table;  // W(u) samples
  bool mirrored = false;  // evaluate W(-u) of the stored (unmirrored) potential

  double well_lo() const { return std::min(zeta1, zeta2); }
  double well_hi() const { return std::max(zeta1, zeta2); }
  double resolved_delta0() const;
};

std::pair<double, double> potential_eval_grad(const PotentialSpec& p, double u);
// W(u + d) - W(u) without cancellation for the closed forms.
double potential_delta(const PotentialSpec& p, double u, double d);
// Bound on |W''| over the well interval (sampled).
double potential_curvature_bound(const PotentialSpec& p);
// max |W'| over the well interval (sampled).
double potential_slope_bound(const PotentialSpec& p);

enum class ModulationForm { Constant, CosinePerturbation, Tabulated };

struct ModulationSpec {
  ModulationForm form = ModulationForm::Constant;
  double value = 1.0;
  double base = 2.0;
  double eps = 0.0;
  double delta_freq = 1.0;
  std::shared_ptr<const TabulatedCurve> table;  // a(x) samples, constant extension
  double a_lower = kNaN;
  double a_upper = kNaN;
  double m1 = kNaN, m2 = kNaN, omega = kNaN, theta = kNaN, gamma = kNaN;
};

double modulation_eval(const ModulationSpec& m, double x);
// Lower/upper bounds: declared values, otherwise the exact range of the form.
double modulation_lower(const ModulationSpec& m);
double modulation_upper(const ModulationSpec& m);
// Fills unset m1, m2, omega, theta, gamma (slow cosine perturbation defaults).
ModulationSpec resolve_modulation(const ModulationSpec& m, bool* defaulted = nullptr);

// Quintic smoothstep ramp from zeta1 (x <= -1) to zeta2 (x >= 1).
struct ReferenceProfile {
  double zeta1 = 0.0;
  double zeta2 = 2.0 * kPi;
  double eval(double x) const;
  double derivative(double x) const;
  double c1_norm() const;  // sup|Q| + sup|Q'|
};

inline double reference_profile_eval(const ReferenceProfile& ref, double x) { return ref.eval(x); }

struct ProblemSpec {
  KernelSpec kernel;
  PotentialSpec potential;
  ModulationSpec modulation;
  ReferenceProfile reference() const { return {potential.zeta1, potential.zeta2}; }
};

// Spec for u -> -u: wells negated, potential evaluated on the mirror.
ProblemSpec reflect(const ProblemSpec& spec);

// Explicit layer pi + 2 arctan(x) (solution for K = 1/(pi r^2), W = 1 - cos).
inline double explicit_layer(double x) { return kPi + 2.0 * std::atan(x); }

struct HypothesisCheck {
  std::string name;   // machine name
  std::string label;  // human label
  bool applicable = true;
  bool pass = false;
  double measured = kNaN;  // measured quantity (worst ratio / margin)
  double bound = kNaN;     // the bound it is compared against
  double worst_at = kNaN;  // location of the worst sample
  std::string detail;
};

struct ModelReport {
  std::vector<HypothesisCheck> checks;
  std::vector<std::string> notes;  // defaults that were filled in
  bool all_pass() const;
  const HypothesisCheck* find(const std::string& name) const;
};

// Samples every structural hypothesis; failures are reported, not thrown.
ModelReport verify_model(const ProblemSpec& spec, int sample_count = 10000, double x_window = 100.0);

}  // namespace nlhet
