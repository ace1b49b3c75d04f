#include "jitcert/interval.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

#include "jitcert/model.hpp"

namespace jitcert::iv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double bit_step_away_from_zero(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof b);
  ++b;
  double r;
  std::memcpy(&r, &b, sizeof r);
  return r;
}

double bit_step_toward_zero(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof b);
  --b;
  double r;
  std::memcpy(&r, &b, sizeof r);
  return r;
}
}  // namespace

double next_up(double x) {
  if (std::isnan(x) || x == kInf) return x;
  if (x == 0.0) return std::numeric_limits<double>::denorm_min();
  return x > 0.0 ? bit_step_away_from_zero(x) : bit_step_toward_zero(x);
}

double next_down(double x) {
  if (std::isnan(x) || x == -kInf) return x;
  if (x == 0.0) return -std::numeric_limits<double>::denorm_min();
  return x > 0.0 ? bit_step_toward_zero(x) : bit_step_away_from_zero(x);
}

namespace {

// Exactness predicates: when a rounded primitive is provably exact, the
// outward ulp step is skipped. Keeps zeros, identity products and
// power-of-two scalings point-width.
bool sum_exact(double a, double b, double s) {
  return std::isfinite(s) && s - a == b && s - b == a;
}
bool prod_exact(double a, double b, double r) {
  if (a == 0.0 || b == 0.0) return true;  // exact zero product
  // In the subnormal range the fma residual can itself round to zero,
  // so exactness cannot be certified there.
  if (!std::isfinite(r) || std::fabs(r) < std::numeric_limits<double>::min())
    return false;
  return std::fma(a, b, -r) == 0.0;
}
bool quot_exact(double a, double b, double r) {
  if (a == 0.0) return true;
  if (!std::isfinite(r) || std::fabs(r) < std::numeric_limits<double>::min())
    return false;
  return std::fma(r, b, -a) == 0.0;
}

double add_down(double a, double b) {
  const double s = a + b;
  return sum_exact(a, b, s) ? s : next_down(s);
}
double add_up(double a, double b) {
  const double s = a + b;
  return sum_exact(a, b, s) ? s : next_up(s);
}

}  // namespace

Interval add(Interval a, Interval b) {
  return {add_down(a.lo, b.lo), add_up(a.hi, b.hi)};
}

Interval sub(Interval a, Interval b) {
  return {add_down(a.lo, -b.hi), add_up(a.hi, -b.lo)};
}

Interval mul(Interval a, Interval b) {
  const double p1 = a.lo * b.lo;
  const double p2 = a.lo * b.hi;
  const double p3 = a.hi * b.lo;
  const double p4 = a.hi * b.hi;
  double lo = std::min(std::min(p1, p2), std::min(p3, p4));
  double hi = std::max(std::max(p1, p2), std::max(p3, p4));
  // 0 * inf from unbounded operands yields NaN; the enclosure of any product
  // involving zero contains zero, so these candidates collapse to 0.
  if (std::isnan(lo) || std::isnan(hi)) {
    auto fix = [](double v) { return std::isnan(v) ? 0.0 : v; };
    lo = std::min(std::min(fix(p1), fix(p2)), std::min(fix(p3), fix(p4)));
    hi = std::max(std::max(fix(p1), fix(p2)), std::max(fix(p3), fix(p4)));
    return {next_down(lo), next_up(hi)};
  }
  // Endpoint products are exact when the fma residual vanishes for every
  // candidate attaining the endpoint.
  auto exact_at = [&](double v) {
    if (v == p1 && !prod_exact(a.lo, b.lo, p1)) return false;
    if (v == p2 && !prod_exact(a.lo, b.hi, p2)) return false;
    if (v == p3 && !prod_exact(a.hi, b.lo, p3)) return false;
    if (v == p4 && !prod_exact(a.hi, b.hi, p4)) return false;
    return true;
  };
  return {exact_at(lo) ? lo : next_down(lo), exact_at(hi) ? hi : next_up(hi)};
}

Interval div(Interval a, Interval b) {
  if (b.contains_zero())
    throw std::domain_error("interval division: divisor contains zero");
  const double q1 = a.lo / b.lo;
  const double q2 = a.lo / b.hi;
  const double q3 = a.hi / b.lo;
  const double q4 = a.hi / b.hi;
  const double lo = std::min(std::min(q1, q2), std::min(q3, q4));
  const double hi = std::max(std::max(q1, q2), std::max(q3, q4));
  auto exact_at = [&](double v) {
    if (v == q1 && !quot_exact(a.lo, b.lo, q1)) return false;
    if (v == q2 && !quot_exact(a.lo, b.hi, q2)) return false;
    if (v == q3 && !quot_exact(a.hi, b.lo, q3)) return false;
    if (v == q4 && !quot_exact(a.hi, b.hi, q4)) return false;
    return true;
  };
  return {exact_at(lo) ? lo : next_down(lo), exact_at(hi) ? hi : next_up(hi)};
}

Interval sqrt(Interval a) {
  if (a.lo < 0.0)
    throw std::domain_error("interval sqrt of partially negative interval");
  const double rlo = std::sqrt(a.lo);
  const double rhi = std::sqrt(a.hi);
  return {prod_exact(rlo, rlo, a.lo) ? rlo : next_down(rlo),
          prod_exact(rhi, rhi, a.hi) ? rhi : next_up(rhi)};
}

Interval square(Interval a) {
  const double m = std::max(std::fabs(a.lo), std::fabs(a.hi));
  const double mm = m * m;
  const double hi = prod_exact(m, m, mm) ? mm : next_up(mm);
  if (a.contains_zero()) return {0.0, hi};
  const double s = std::min(std::fabs(a.lo), std::fabs(a.hi));
  const double ss = s * s;
  return {prod_exact(s, s, ss) ? ss : next_down(ss), hi};
}

Interval abs(Interval a) {
  if (a.lo >= 0.0) return a;
  if (a.hi <= 0.0) return {-a.hi, -a.lo};
  return {0.0, std::max(-a.lo, a.hi)};
}

Interval hull(Interval a, Interval b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

Interval exp(Interval a) {
  IntervalMatrix one(1, 1);
  one(0, 0) = a;
  const IntervalMatrix e = exp_enclosure(one);
  return e(0, 0);
}

IntervalMatrix IntervalMatrix::from_point(const Eigen::MatrixXd& m) {
  IntervalMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      r(i, j) = Interval::point(m(i, j));
  return r;
}

IntervalMatrix IntervalMatrix::identity(Eigen::Index n) {
  IntervalMatrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) r(i, i) = Interval::point(1.0);
  return r;
}

IntervalMatrix IntervalMatrix::inflate(const Eigen::MatrixXd& m, double radius) {
  IntervalMatrix r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      r(i, j) = {next_down(m(i, j) - radius), next_up(m(i, j) + radius)};
  return r;
}

Eigen::MatrixXd IntervalMatrix::midpoint() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).mid();
  return m;
}

Eigen::MatrixXd IntervalMatrix::lower() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).lo;
  return m;
}

Eigen::MatrixXd IntervalMatrix::upper() const {
  Eigen::MatrixXd m(rows_, cols_);
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).hi;
  return m;
}

double IntervalMatrix::max_width() const {
  double w = 0.0;
  for (const Interval& e : data_) w = std::max(w, e.width());
  return w;
}

bool IntervalMatrix::contains(const Eigen::MatrixXd& m) const {
  if (m.rows() != rows_ || m.cols() != cols_) return false;
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j)
      if (!(*this)(i, j).contains(m(i, j))) return false;
  return true;
}

IntervalMatrix IntervalMatrix::transpose() const {
  IntervalMatrix r(cols_, rows_);
  for (Eigen::Index i = 0; i < rows_; ++i)
    for (Eigen::Index j = 0; j < cols_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

void IntervalMatrix::set_block(Eigen::Index i0, Eigen::Index j0,
                               const IntervalMatrix& block) {
  for (Eigen::Index i = 0; i < block.rows(); ++i)
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      (*this)(i0 + i, j0 + j) = block(i, j);
}

IntervalMatrix add(const IntervalMatrix& a, const IntervalMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("interval add: dimension mismatch");
  IntervalMatrix r(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r(i, j) = add(a(i, j), b(i, j));
  return r;
}

IntervalMatrix sub(const IntervalMatrix& a, const IntervalMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("interval sub: dimension mismatch");
  IntervalMatrix r(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r(i, j) = sub(a(i, j), b(i, j));
  return r;
}

IntervalMatrix mul(const IntervalMatrix& a, const IntervalMatrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("interval mul: dimension mismatch");
  IntervalMatrix r(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      Interval acc{0.0, 0.0};
      for (Eigen::Index k = 0; k < a.cols(); ++k)
        acc = add(acc, mul(a(i, k), b(k, j)));
      r(i, j) = acc;
    }
  }
  return r;
}

IntervalMatrix scale(const IntervalMatrix& a, Interval s) {
  IntervalMatrix r(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r(i, j) = mul(a(i, j), s);
  return r;
}

IntervalMatrix mul_vec(const IntervalMatrix& a, const IntervalMatrix& x) {
  return mul(a, x);
}

Interval frobenius_norm_bound(const IntervalMatrix& a) {
  Interval acc{0.0, 0.0};
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      acc = add(acc, square(a(i, j)));
  return sqrt(acc);
}

Interval spectral_norm_enclosure(const IntervalMatrix& a,
                                 const SpectralOptions& opts) {
  const Interval frob = frobenius_norm_bound(a);
  const Eigen::MatrixXd mid = a.midpoint();
  if (!mid.allFinite()) return {0.0, frob.hi};

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mid, Eigen::ComputeFullV);
  const Eigen::MatrixXd vt = svd.matrixV();
  if (!vt.allFinite()) return {0.0, frob.hi};
  const IntervalMatrix v = IntervalMatrix::from_point(vt);

  // alpha >= ||I - V~'V~||  (Frobenius bound)
  const IntervalMatrix vtv = mul(v.transpose(), v);
  const IntervalMatrix i_minus =
      sub(IntervalMatrix::identity(vt.cols()), vtv);
  const double alpha = frobenius_norm_bound(i_minus).hi;
  if (!(alpha < opts.alpha_max)) return {0.0, frob.hi};

  // D + E = V~' A' A V~ with D diagonal.
  const IntervalMatrix gram = mul(a.transpose(), a);
  const IntervalMatrix b = mul(mul(v.transpose(), gram), v);
  IntervalMatrix off = b;
  double dmax_lo = -kInf, dmax_hi = -kInf;
  for (Eigen::Index i = 0; i < b.rows(); ++i) {
    dmax_lo = std::max(dmax_lo, b(i, i).lo);
    dmax_hi = std::max(dmax_hi, b(i, i).hi);
    off(i, i) = {0.0, 0.0};
  }
  const double eps = frobenius_norm_bound(off).hi;

  const Interval one{1.0, 1.0};
  const Interval al{alpha, alpha};
  const Interval eps_iv{eps, eps};
  const Interval upper_arg =
      div(add(Interval{dmax_hi, dmax_hi}, eps_iv), sub(one, al));
  const Interval lower_arg =
      div(sub(Interval{dmax_lo, dmax_lo}, eps_iv), add(one, al));
  const double hi = sqrt(clip_below(upper_arg, 0.0)).hi;
  const double lo = sqrt(clip_below(lower_arg, 0.0)).lo;
  // The Frobenius bound is always valid; keep the tighter upper endpoint.
  return {std::max(lo, 0.0), std::min(hi, frob.hi)};
}

IntervalMatrix exp_enclosure(const IntervalMatrix& a, const ExpOptions& opts) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("exp_enclosure: matrix must be square");
  const Eigen::Index n = a.rows();
  const int r = opts.taylor_order;

  // Scale by 2^-s until the Frobenius bound (also a spectral bound) <= 1/2.
  IntervalMatrix scaled = a;
  int s = 0;
  while (frobenius_norm_bound(scaled).hi > 0.5 && s < 1100) {
    scaled = scale(scaled, Interval::point(0.5));
    ++s;
  }
  const double theta = frobenius_norm_bound(scaled).hi;

  // Interval Taylor polynomial sum_{i=0}^{r} M^i / i!.
  IntervalMatrix sum = IntervalMatrix::identity(n);
  IntervalMatrix term = IntervalMatrix::identity(n);
  for (int i = 1; i <= r; ++i) {
    term = mul(term, scaled);
    term = scale(term, div(Interval::point(1.0),
                           Interval::point(static_cast<double>(i))));
    sum = add(sum, term);
  }

  // Remainder ball: sum_{i>r} theta^i/i! <= theta^{r+1}/((r+1)! (1-theta/(r+2))).
  Interval pow{1.0, 1.0};
  Interval fact{1.0, 1.0};
  const Interval th{theta, theta};
  for (int i = 1; i <= r + 1; ++i) {
    pow = mul(pow, th);
    fact = mul(fact, Interval::point(static_cast<double>(i)));
  }
  const Interval geom =
      sub(Interval::point(1.0),
          div(th, Interval::point(static_cast<double>(r + 2))));
  if (geom.lo <= 0.0)
    throw std::domain_error("exp_enclosure: remainder series does not converge");
  const double radius = div(div(pow, fact), geom).hi;
  const Interval ball{-radius, radius};
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) sum(i, j) = add(sum(i, j), ball);

  for (int k = 0; k < s; ++k) sum = mul(sum, sum);
  return sum;
}

std::optional<IntervalMatrix> cholesky_enclosure(const IntervalMatrix& p) {
  if (p.rows() != p.cols())
    throw std::invalid_argument("cholesky_enclosure: matrix must be square");
  const Eigen::Index n = p.rows();
  IntervalMatrix l(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Interval d = p(j, j);
    for (Eigen::Index k = 0; k < j; ++k) d = sub(d, square(l(j, k)));
    if (!(d.lo > 0.0)) return std::nullopt;  // not verifiably positive definite
    l(j, j) = sqrt(d);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Interval s = p(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s = sub(s, mul(l(i, k), l(j, k)));
      l(i, j) = div(s, l(j, j));
    }
  }
  return l;
}

std::optional<IntervalMatrix> triangular_inverse_enclosure(
    const IntervalMatrix& l) {
  if (l.rows() != l.cols())
    throw std::invalid_argument("triangular_inverse: matrix must be square");
  const Eigen::Index n = l.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    if (l(i, i).contains_zero()) return std::nullopt;

  IntervalMatrix inv(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    inv(j, j) = div(Interval::point(1.0), l(j, j));
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Interval s{0.0, 0.0};
      for (Eigen::Index k = j; k < i; ++k) s = add(s, mul(l(i, k), inv(k, j)));
      inv(i, j) = div(neg(s), l(i, i));
    }
  }
  return inv;
}

std::pair<double, double> gershgorin_bounds(const IntervalMatrix& sym) {
  double lo = kInf, hi = -kInf;
  for (Eigen::Index i = 0; i < sym.rows(); ++i) {
    Interval radius{0.0, 0.0};
    for (Eigen::Index j = 0; j < sym.cols(); ++j)
      if (j != i) radius = add(radius, abs(sym(i, j)));
    lo = std::min(lo, sub(sym(i, i), radius).lo);
    hi = std::max(hi, add(sym(i, i), radius).hi);
  }
  return {lo, hi};
}

IntervalMatrix structured_exp_enclosure(const model::ClosedLoopSystem& sys,
                                        double delta) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  const Eigen::Index na = st.n_p + st.m;

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(na, na);
  aug.topLeftCorner(st.n_p, st.n_p) = sys.A_p;
  aug.topRightCorner(st.n_p, st.m) = sys.B_p;
  const IntervalMatrix aug_delta =
      scale(IntervalMatrix::from_point(aug), Interval::point(delta));
  const IntervalMatrix e_aug = exp_enclosure(aug_delta);

  IntervalMatrix result = IntervalMatrix::identity(st.n());
  for (Eigen::Index i = 0; i < st.n_p; ++i) {
    for (Eigen::Index j = 0; j < st.n_p; ++j)
      result(st.plant() + i, st.plant() + j) = e_aug(i, j);
    for (Eigen::Index j = 0; j < st.m; ++j)
      result(st.plant() + i, st.act() + j) = e_aug(i, st.n_p + j);
  }
  return result;
}

}  // namespace jitcert::iv
