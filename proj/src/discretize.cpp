#include "nlhet/discretize.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <cstring>
#include <mutex>

#include "nlhet/errors.hpp"
#include "nlhet/parallel.hpp"

namespace nlhet {

// ---------------------------------------------------------------- grid / profile

Grid Grid::make(double R, std::size_t n) {
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("grid: R must be positive and finite");
  if (n < 3 || n % 2 == 0) throw DomainError("grid: n must be odd and >= 3");
  return Grid{R, n};
}

Grid Grid::with_spacing(double R, double h) {
  if (!(h > 0.0)) throw DomainError("grid: spacing must be positive");
  auto cells = static_cast<std::size_t>(std::llround(2.0 * R / h));
  if (cells % 2) ++cells;
  return make(R, std::max<std::size_t>(cells, 2) + 1);
}

Profile Profile::sample(const Grid& g, const std::function<double(double)>& f, double left, double right) {
  Profile p{g, std::vector<double>(g.n), left, right};
  for (std::size_t i = 0; i < g.n; ++i) p.values[i] = f(g.x(std::int64_t(i)));
  return p;
}

Profile Profile::constant(const Grid& g, double c) { return Profile{g, std::vector<double>(g.n, c), c, c}; }

bool Profile::far_fields_match(double tol) const {
  return std::fabs(values.front() - left_const) <= tol && std::fabs(values.back() - right_const) <= tol;
}

Profile make_reference(const Grid& g, const ReferenceProfile& ref) {
  return Profile::sample(g, [&](double x) { return ref.eval(x); }, ref.zeta1, ref.zeta2);
}

Profile restrict_window(const Profile& q, double r) {
  const double h = q.grid.h();
  auto m = static_cast<std::int64_t>(std::llround(r / h));
  if (std::fabs(double(m) * h - r) > 1e-9 * std::max(1.0, r)) throw DomainError("restrict_window: r is not a node multiple");
  std::int64_t c = std::int64_t(q.grid.n / 2);
  if (m < 1 || m > c) throw DomainError("restrict_window: r outside the window");
  Profile out{Grid::make(double(m) * h, std::size_t(2 * m + 1)), {}, q.left_const, q.right_const};
  out.values.assign(q.values.begin() + (c - m), q.values.begin() + (c + m + 1));
  return out;
}

TailClosure default_tail(const KernelSpec& k) {
  return k.form == KernelForm::Tabulated ? TailClosure::TruncatedZero : TailClosure::AnalyticPower;
}

// ---------------------------------------------------------------- lattice kernel

namespace {

// sum_{k >= m} k^{-p}, Euler-Maclaurin, m large.
double power_tail(double m, double p) {
  double a = std::pow(m, -p);
  return m * a / (p - 1.0) + 0.5 * a + p * a / (12.0 * m) - p * (p + 1.0) * (p + 2.0) * a / (720.0 * m * m * m);
}

}  // namespace

LatticeKernel::LatticeKernel(const KernelSpec& spec, double h, std::size_t min_store, TailClosure tail)
    : spec_(resolve(spec)), h_(h), tail_(tail) {
  if (spec.form == KernelForm::Tabulated && tail == TailClosure::AnalyticPower)
    throw ConfigError("AnalyticPower tail closure requires a power-type kernel");
  if (!(h > 0.0)) throw DomainError("lattice spacing must be positive");
  std::size_t M = min_store + 2;
  if (tail == TailClosure::AnalyticPower) {
    M = std::max<std::size_t>(M, 1000);
    if (spec_.form == KernelForm::TruncatedPower)
      M = std::max<std::size_t>(M, static_cast<std::size_t>(std::ceil(2.0 * spec_.r0 / h)) + 2);
    far_coef_ = spec_.c_far;
  }
  const double s = spec_.s;
  w_.assign(M + 1, 0.0);
  for (std::size_t k = 1; k <= M; ++k) w_[k] = h * kernel_eval(spec_, double(k) * h);

  // own cell |t| < h/2: (1/h^2) int_0^{h/2} t^2 K(t) dt
  double half = 0.5 * h;
  if (spec_.form == KernelForm::PowerLaw || (spec_.form == KernelForm::TruncatedPower && half <= spec_.r0)) {
    own_ = spec_.c * std::pow(half, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) / (h * h);
  } else {
    own_ = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
               [&](double t) { return t > 0.0 ? t * t * kernel_eval(spec_, t) : 0.0; }, 0.0, half, 15, 1e-12) /
           (h * h);
  }
  w_[1] += own_;

  S_.assign(M + 2, 0.0);
  S_[M + 1] = (tail == TailClosure::AnalyticPower)
                  ? far_coef_ * std::pow(h, -2.0 * s) * power_tail(double(M + 1), 1.0 + 2.0 * s)
                  : 0.0;
  for (std::size_t m = M; m >= 1; --m) S_[m] = S_[m + 1] + w_[m];
}

double LatticeKernel::weight(std::int64_t k) const {
  if (k < 0) k = -k;
  if (k == 0) return 0.0;
  if (std::size_t(k) < w_.size()) return w_[std::size_t(k)];
  if (tail_ == TailClosure::TruncatedZero) return 0.0;
  return h_ * far_coef_ * std::pow(double(k) * h_, -1.0 - 2.0 * spec_.s);
}

double LatticeKernel::tail(double m) const {
  if (m < 1.0) throw DomainError("lattice tail index must be >= 1");
  if (m < double(S_.size())) return S_[std::size_t(m)];
  if (tail_ == TailClosure::TruncatedZero) return 0.0;
  return far_coef_ * std::pow(h_, -2.0 * spec_.s) * power_tail(m, 1.0 + 2.0 * spec_.s);
}

// ---------------------------------------------------------------- operator

namespace {
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}
constexpr std::size_t kFftThreshold = 768;
}  // namespace

struct NonlocalOperator::Fft {
  std::size_t N = 0;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan fwd = nullptr, bwd = nullptr;
  std::vector<std::complex<double>> spectrum;

  Fft(const LatticeKernel& lat, std::size_t n) {
    N = 1;
    while (N < 2 * n) N <<= 1;
    std::lock_guard<std::mutex> lk(fftw_mutex());
    in = fftw_alloc_real(N);
    out = fftw_alloc_complex(N / 2 + 1);
    fwd = fftw_plan_dft_r2c_1d(int(N), in, out, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(int(N), out, in, FFTW_ESTIMATE);
    std::fill(in, in + N, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      in[k] = lat.weight(std::int64_t(k));
      in[N - k] = in[k];
    }
    fftw_execute(fwd);
    spectrum.resize(N / 2 + 1);
    for (std::size_t k = 0; k <= N / 2; ++k) spectrum[k] = {out[k][0] / double(N), out[k][1] / double(N)};
  }
  ~Fft() {
    std::lock_guard<std::mutex> lk(fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(in);
    fftw_free(out);
  }
  void convolve(const double* x, double* y, std::size_t n) {
    std::memcpy(in, x, n * sizeof(double));
    std::fill(in + n, in + N, 0.0);
    fftw_execute(fwd);
    for (std::size_t k = 0; k <= N / 2; ++k) {
      std::complex<double> z(out[k][0], out[k][1]);
      z *= spectrum[k];
      out[k][0] = z.real();
      out[k][1] = z.imag();
    }
    fftw_execute(bwd);
    std::memcpy(y, in, n * sizeof(double));
  }
};

NonlocalOperator::NonlocalOperator(const KernelSpec& spec, const Grid& grid, TailClosure tail)
    : grid_(grid), lat_(spec, grid.h(), grid.n, tail) {
  const std::size_t n = grid.n;
  tl_.resize(n);
  tr_.resize(n);
  diag_.resize(n);
  const double S1 = lat_.tail(1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (tail == TailClosure::AnalyticPower) {
      tl_[i] = lat_.tail(double(i + 1));
      tr_[i] = lat_.tail(double(n - i));
      diag_[i] = 2.0 * S1;
    } else {
      tl_[i] = tr_[i] = 0.0;
      diag_[i] = (S1 - lat_.tail(double(i + 1))) + (S1 - lat_.tail(double(n - i)));
    }
  }
  if (n > kFftThreshold) fft_ = std::make_unique<Fft>(lat_, n);
}

NonlocalOperator::~NonlocalOperator() = default;
NonlocalOperator::NonlocalOperator(NonlocalOperator&&) noexcept = default;
NonlocalOperator& NonlocalOperator::operator=(NonlocalOperator&&) noexcept = default;

void NonlocalOperator::convolve(const double* x, double* y) const {
  const std::size_t n = grid_.n;
  if (fft_) {
    fft_->convolve(x, y, n);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) acc += lat_.weight(std::int64_t(i > j ? i - j : j - i)) * x[j];
    y[i] = acc;
  }
}

void NonlocalOperator::apply_zero_far(const double* d, double* out) const {
  convolve(d, out);
  for (std::size_t i = 0; i < grid_.n; ++i) out[i] = diag_[i] * d[i] - out[i];
}

double NonlocalOperator::apply_at(const Profile& q, std::size_t i) const {
  const std::size_t n = grid_.n;
  double qi = q.values[i], acc = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) acc += lat_.weight(std::int64_t(i > j ? i - j : j - i)) * (qi - q.values[j]);
  return acc + tl_[i] * (qi - q.left_const) + tr_[i] * (qi - q.right_const);
}

Field NonlocalOperator::apply(const Profile& q) const {
  if (q.grid != grid_) throw DomainError("profile grid does not match operator grid");
  const std::size_t n = grid_.n;
  Field out(n);
  if (!fft_) {
    parallel_for(0, n, [&](std::size_t i) { out[i] = apply_at(q, i); });
    return out;
  }
  // shift by the left constant to keep magnitudes small (L annihilates constants)
  const double c = q.left_const;
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = q.values[i] - c;
  convolve(x.data(), y.data());
  const double rc = q.right_const - c;
  for (std::size_t i = 0; i < n; ++i) out[i] = diag_[i] * x[i] - y[i] - tr_[i] * rc;
  return out;
}

double apply_nonlocal(const Profile& q, const KernelSpec& spec, TailClosure tail, std::size_t i) {
  if (spec.form == KernelForm::Tabulated && tail == TailClosure::AnalyticPower)
    throw ConfigError("AnalyticPower tail closure requires a power-type kernel");
  const std::size_t n = q.grid.n;
  if (i < 1 || i + 1 >= n) throw DomainError("apply_nonlocal: node index must be strictly interior");
  LatticeKernel lat(spec, q.grid.h(), n, tail);
  double qi = q.values[i], acc = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != i) acc += lat.weight(std::int64_t(i > j ? i - j : j - i)) * (qi - q.values[j]);
  if (tail == TailClosure::AnalyticPower)
    acc += lat.tail(double(i + 1)) * (qi - q.left_const) + lat.tail(double(n - i)) * (qi - q.right_const);
  return acc;
}

Field apply_full_operator(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qs,
                          const NonlocalOperator& op) {
  if (q.grid != qs.grid || q.grid != op.grid()) throw DomainError("apply_full_operator: grid mismatch");
  const std::size_t n = q.grid.n;
  const double h = q.grid.h();
  Field L = op.apply(q);
  Field r(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double d2 = (q.values[i + 1] - 2.0 * q.values[i] + q.values[i - 1]) / (h * h);
    double a = modulation_eval(spec.modulation, q.grid.x(std::int64_t(i)));
    r[i] = -eta * d2 + mu * (q.values[i] - qs.values[i]) + L[i] + a * potential_eval_grad(spec.potential, q.values[i]).second;
  }
  return r;
}

Field apply_full_operator(const Profile& q, const ProblemSpec& spec, double eta, double mu, const Profile& qs) {
  if (q.grid != qs.grid) throw DomainError("apply_full_operator: grid mismatch");
  NonlocalOperator op(spec.kernel, q.grid, default_tail(spec.kernel));
  return apply_full_operator(q, spec, eta, mu, qs, op);
}

// ---------------------------------------------------------------- double sums

IndexRange lattice_range(const Grid& g, const Interval& I) {
  constexpr double big = 4e18;
  const double h = g.h();
  IndexRange r{INT64_MIN, INT64_MAX};
  if (std::isfinite(I.lo)) r.first = std::int64_t(std::clamp(std::ceil((I.lo + g.R) / h - 1e-9), -big, big));
  if (std::isfinite(I.hi)) r.last = std::int64_t(std::clamp(std::ceil((I.hi + g.R) / h - 1e-9), -big, big)) - 1;
  return r;
}

namespace {

struct Parts {
  IndexRange left, win, right;
};

Parts split(const IndexRange& r, std::int64_t n) {
  Parts p;
  p.left = {r.first, std::min<std::int64_t>(r.last, -1)};
  p.win = {std::max<std::int64_t>(r.first, 0), std::min<std::int64_t>(r.last, n - 1)};
  p.right = {std::max<std::int64_t>(r.first, n), r.last};
  return p;
}

// sum_{j in [a, b]} w_{i - j}, j < 0 <= i
double coupling_left(const LatticeKernel& lat, std::int64_t i, const IndexRange& y) {
  double s = lat.tail(double(i - y.last));
  if (y.first != INT64_MIN) s -= lat.tail(double(i - y.first + 1));
  return s;
}

// sum_{j in [a, b]} w_{j - i}, i < n <= j
double coupling_right(const LatticeKernel& lat, std::int64_t i, const IndexRange& y) {
  double s = lat.tail(double(y.first - i));
  if (y.last != INT64_MAX) s -= lat.tail(double(y.last - i + 1));
  return s;
}

// sum over i in xl (left exterior), j in yr (right exterior) of w_{j - i}
double exterior_cross(const LatticeKernel& lat, const IndexRange& xl, const IndexRange& yr) {
  constexpr std::int64_t cap = 100000000;
  if (xl.first == INT64_MIN && yr.last == INT64_MAX) return INFINITY;
  double s = 0.0;
  if (xl.first != INT64_MIN) {
    if (xl.last - xl.first > cap) throw DomainError("interval too long for exterior summation");
    for (std::int64_t i = xl.first; i <= xl.last; ++i) s += coupling_right(lat, i, yr);
  } else {
    if (yr.last - yr.first > cap) throw DomainError("interval too long for exterior summation");
    for (std::int64_t j = yr.first; j <= yr.last; ++j) s += lat.tail(double(j - xl.last));
  }
  return s;
}

}  // namespace

double bilinear_form(const Profile& f, const Profile& g, const Interval& I, const Interval& J, const LatticeKernel& lat) {
  if (f.grid != g.grid) throw DomainError("bilinear_form: grid mismatch");
  const std::int64_t n = std::int64_t(f.grid.n);
  Parts X = split(lattice_range(f.grid, I), n), Y = split(lattice_range(f.grid, J), n);
  const bool ext = lat.closure() == TailClosure::AnalyticPower;

  double total = 0.0;
  // window x window
  if (!X.win.empty() && !Y.win.empty()) {
    std::vector<double> row(std::size_t(X.win.last - X.win.first + 1), 0.0);
    parallel_for(0, row.size(), [&](std::size_t r) {
      std::int64_t i = X.win.first + std::int64_t(r);
      double fi = f.values[std::size_t(i)], gi = g.values[std::size_t(i)], acc = 0.0;
      for (std::int64_t j = Y.win.first; j <= Y.win.last; ++j) {
        if (j == i) continue;
        acc += lat.weight(i - j) * (fi - f.values[std::size_t(j)]) * (gi - g.values[std::size_t(j)]);
      }
      row[r] = acc;
    });
    for (double v : row) total += v;
  }
  if (ext) {
    // window x exterior, both orders
    auto win_ext = [&](const IndexRange& w, const IndexRange& el, const IndexRange& er) {
      double acc = 0.0;
      if (w.empty()) return acc;
      for (std::int64_t i = w.first; i <= w.last; ++i) {
        double fi = f.values[std::size_t(i)], gi = g.values[std::size_t(i)];
        if (!el.empty()) acc += (fi - f.left_const) * (gi - g.left_const) * coupling_left(lat, i, el);
        if (!er.empty()) acc += (fi - f.right_const) * (gi - g.right_const) * coupling_right(lat, i, er);
      }
      return acc;
    };
    total += win_ext(X.win, Y.left, Y.right);
    total += win_ext(Y.win, X.left, X.right);
    double F = (f.left_const - f.right_const) * (g.left_const - g.right_const);
    if (F != 0.0) {
      if (!X.left.empty() && !Y.right.empty()) total += F * exterior_cross(lat, X.left, Y.right);
      if (!Y.left.empty() && !X.right.empty()) total += F * exterior_cross(lat, Y.left, X.right);
    }
  }
  return lat.h() * total;
}

double bilinear_form(const Profile& f, const Profile& g, const Interval& I, const Interval& J, const KernelSpec& spec) {
  if (f.grid != g.grid) throw DomainError("bilinear_form: grid mismatch");
  LatticeKernel lat(spec, f.grid.h(), f.grid.n, default_tail(spec));
  return bilinear_form(f, g, I, J, lat);
}

double seminorm_sq(const Profile& f, const Interval& X, const Interval& Y, const KernelSpec& spec) {
  return bilinear_form(f, f, X, Y, spec);
}

double seminorm_K(const Profile& f, const Interval& X, const Interval& Y, const KernelSpec& spec) {
  return std::sqrt(std::max(0.0, seminorm_sq(f, X, Y, spec)));
}

}  // namespace nlhet
