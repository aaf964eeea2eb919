#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "nlhet/model.hpp"

namespace nlhet {

// Uniform grid x_i = -R + i h on [-R, R], n odd.
struct Grid {
  double R = 1.0;
  std::size_t n = 3;

  static Grid make(double R, std::size_t n);
  // Grid with spacing as close to h as possible (n rounded to odd).
  static Grid with_spacing(double R, double h);
  double h() const { return 2.0 * R / double(n - 1); }
  // Lattice coordinate; valid for any integer index, including exterior ones.
  double x(std::int64_t i) const { return -R + double(i) * h(); }
  bool operator==(const Grid& o) const { return R == o.R && n == o.n; }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

// Half-open interval [lo, hi); infinite ends allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  static Interval line() { return {}; }
  double length() const { return hi - lo; }
};

using Field = std::vector<double>;

// Sampled function on the window plus exact constant far fields.
struct Profile {
  Grid grid;
  std::vector<double> values;
  double left_const = 0.0;
  double right_const = 0.0;

  static Profile sample(const Grid& g, const std::function<double(double)>& f, double left, double right);
  static Profile constant(const Grid& g, double c);
  // Value at any lattice index (far-field constants outside the window).
  double at(std::int64_t j) const {
    if (j < 0) return left_const;
    if (j >= std::int64_t(values.size())) return right_const;
    return values[std::size_t(j)];
  }
  std::size_t size() const { return values.size(); }
  // values[0] and values[n-1] match the far fields within tol.
  bool far_fields_match(double tol = 1e-9) const;
};

Profile make_reference(const Grid& g, const ReferenceProfile& ref);

// Nodes of q inside [-r, r] as a profile on the smaller window (same far fields).
Profile restrict_window(const Profile& q, double r);

enum class TailClosure { AnalyticPower, TruncatedZero };

// AnalyticPower for power-type kernels, TruncatedZero for tabulated ones.
TailClosure default_tail(const KernelSpec& k);

// Lattice weights w_k = h K(kh) (k >= 1), with the own-cell moment folded into w_1,
// and tail sums S(m) = sum_{k >= m} w_k.
class LatticeKernel {
 public:
  LatticeKernel(const KernelSpec& spec, double h, std::size_t min_store, TailClosure tail);
  double h() const { return h_; }
  TailClosure closure() const { return tail_; }
  const KernelSpec& spec() const { return spec_; }
  std::size_t stored() const { return w_.size() - 1; }
  double weight(std::int64_t k) const;
  // S(m) for m >= 1; m may be astronomically large.
  double tail(double m) const;
  // Extra weight given to offset 1 from the own cell.
  double own_cell() const { return own_; }

 private:
  KernelSpec spec_;
  double h_;
  TailClosure tail_;
  double own_ = 0.0;
  std::vector<double> w_;  // w_[k], w_[0] unused
  std::vector<double> S_;  // S_[m] for m in [1, stored+1]
  double far_coef_ = 0.0;
};

// Discrete nonlocal operator on one grid. apply() methods reuse internal FFT
// buffers: an instance must not be used from two threads at once.
class NonlocalOperator {
 public:
  NonlocalOperator(const KernelSpec& spec, const Grid& grid, TailClosure tail);
  ~NonlocalOperator();
  NonlocalOperator(const NonlocalOperator&) = delete;
  NonlocalOperator& operator=(const NonlocalOperator&) = delete;
  NonlocalOperator(NonlocalOperator&&) noexcept;
  NonlocalOperator& operator=(NonlocalOperator&&) noexcept;

  const Grid& grid() const { return grid_; }
  const LatticeKernel& lattice() const { return lat_; }
  // Coupling of window node i to the left/right exterior lattice.
  double left_coupling(std::size_t i) const { return tl_[i]; }
  double right_coupling(std::size_t i) const { return tr_[i]; }
  // Total coupling of node i (window and exterior).
  double diag(std::size_t i) const { return diag_[i]; }

  // LQ at all window nodes.
  Field apply(const Profile& q) const;
  double apply_at(const Profile& q, std::size_t i) const;
  // L applied to a window field with zero far fields.
  void apply_zero_far(const double* d, double* out) const;
  // y_i = sum_{j != i} w_{|i-j|} x_j over the window.
  void convolve(const double* x, double* y) const;

 private:
  struct Fft;
  Grid grid_;
  LatticeKernel lat_;
  std::vector<double> tl_, tr_, diag_;
  std::unique_ptr<Fft> fft_;
};

// LQ(x_i) at one strictly interior node.
double apply_nonlocal(const Profile& q, const KernelSpec& spec, TailClosure tail, std::size_t i);

// -eta D2 Q + mu (Q - Qsharp) + LQ + a W'(Q) on interior nodes (boundary entries are 0).
Field apply_full_operator(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qsharp);
Field apply_full_operator(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qsharp,
                          const NonlocalOperator& op);

// sum over lattice pairs (i in X, j in Y, i != j) of h w_{|i-j|} (f_i - f_j)(g_i - g_j).
double bilinear_form(const Profile& f, const Profile& g, const Interval& I, const Interval& J, const KernelSpec& spec);
double bilinear_form(const Profile& f, const Profile& g, const Interval& I, const Interval& J, const LatticeKernel& lat);
double seminorm_sq(const Profile& f, const Interval& X, const Interval& Y, const KernelSpec& spec);
double seminorm_K(const Profile& f, const Interval& X, const Interval& Y, const KernelSpec& spec);

// Lattice index range [first, last] of nodes with x in the interval; INT64_MIN/MAX for infinite ends.
struct IndexRange {
  std::int64_t first, last;
  bool empty() const { return last < first; }
};
IndexRange lattice_range(const Grid& g, const Interval& I);

}  // namespace nlhet
