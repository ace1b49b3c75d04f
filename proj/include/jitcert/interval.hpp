#pragma once

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <vector>

namespace jitcert {

namespace model {
struct ClosedLoopSystem;
}  // namespace model

namespace iv {

// Successor/predecessor in the double grid. Used to widen every rounded
// result outward; no global rounding-mode state is touched, so all interval
// operations stay safe under concurrent use.
double next_up(double x);
double next_down(double x);

/// Closed interval [lo, hi] of doubles. Every arithmetic operation returns
/// an interval that contains the exact real result for all member values
/// (outward rounding by one ulp per primitive).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval point(double v) { return {v, v}; }

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains_zero() const { return lo <= 0.0 && 0.0 <= hi; }
  bool valid() const { return lo <= hi; }
};

Interval add(Interval a, Interval b);
Interval sub(Interval a, Interval b);
Interval mul(Interval a, Interval b);
// Requires b to exclude zero; throws std::domain_error otherwise.
Interval div(Interval a, Interval b);
// Requires a.lo >= 0.
Interval sqrt(Interval a);
Interval square(Interval a);
inline Interval neg(Interval a) { return {-a.hi, -a.lo}; }
Interval abs(Interval a);
Interval hull(Interval a, Interval b);
// Lower endpoint clipped to at least `floor` (for quantities known
// nonnegative, e.g. norms).
inline Interval clip_below(Interval a, double floor) {
  return {a.lo < floor ? floor : a.lo, a.hi < floor ? floor : a.hi};
}
// Enclosure of e^x for all x in a. Verified via the 1x1 matrix exponential
// (no reliance on libm accuracy).
Interval exp(Interval a);

/// Dense rectangular matrix of intervals. Mirrors the handful of operations
/// the certification pipeline needs; everything is outward rounded.
class IntervalMatrix {
 public:
  IntervalMatrix() = default;
  IntervalMatrix(Eigen::Index rows, Eigen::Index cols)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows * cols)) {}

  static IntervalMatrix from_point(const Eigen::MatrixXd& m);
  static IntervalMatrix identity(Eigen::Index n);
  // Entrywise [m - radius, m + radius] (outward rounded).
  static IntervalMatrix inflate(const Eigen::MatrixXd& m, double radius);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }

  Interval& operator()(Eigen::Index i, Eigen::Index j) {
    return data_[static_cast<size_t>(i * cols_ + j)];
  }
  const Interval& operator()(Eigen::Index i, Eigen::Index j) const {
    return data_[static_cast<size_t>(i * cols_ + j)];
  }

  Eigen::MatrixXd midpoint() const;
  Eigen::MatrixXd lower() const;
  Eigen::MatrixXd upper() const;
  double max_width() const;
  bool contains(const Eigen::MatrixXd& m) const;

  IntervalMatrix transpose() const;
  // Writes `block` at (i0, j0); dimensions must fit.
  void set_block(Eigen::Index i0, Eigen::Index j0, const IntervalMatrix& block);

 private:
  Eigen::Index rows_ = 0, cols_ = 0;
  std::vector<Interval> data_;
};

IntervalMatrix add(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix sub(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix mul(const IntervalMatrix& a, const IntervalMatrix& b);
IntervalMatrix scale(const IntervalMatrix& a, Interval s);
Eigen::VectorXd mid_col(const IntervalMatrix& a);

// Interval matrix-vector product (vector as n x 1 IntervalMatrix helpers).
IntervalMatrix mul_vec(const IntervalMatrix& a, const IntervalMatrix& x);

/// Enclosure of the Frobenius norm of every member matrix. The upper
/// endpoint is also a verified bound on the spectral norm.
Interval frobenius_norm_bound(const IntervalMatrix& a);

struct SpectralOptions {
  // Above this bound on ||I - V~' V~|| the tight path degrades quickly and
  // the Frobenius fallback is used instead.
  double alpha_max = 0.5;
};

/// Verified two-sided enclosure of the spectral norm (maximum singular
/// value), following Rump's singular-value bounds: an approximate floating
/// right-singular basis V~ of the midpoint matrix diagonalizes A'A up to a
/// remainder E; with alpha >= ||I - V~'V~|| and eps >= ||E|| the enclosure
/// is [sqrt((max d - eps)/(1+alpha)), sqrt((max d + eps)/(1-alpha))].
/// Falls back to [0, frobenius bound] when alpha is too large.
Interval spectral_norm_enclosure(const IntervalMatrix& a,
                                 const SpectralOptions& opts = {});

struct ExpOptions {
  int taylor_order = 20;
};

/// Enclosure of e^M for every member M of a (square). Scaling and squaring
/// with an interval Taylor polynomial: M is divided by 2^s until the
/// Frobenius bound is <= 1/2, the series is summed to `taylor_order`, a
/// rigorous remainder ball is added to every entry, and the result is
/// squared s times in interval arithmetic.
IntervalMatrix exp_enclosure(const IntervalMatrix& a, const ExpOptions& opts = {});

/// Interval Cholesky factorization. Success certifies that every symmetric
/// member of `p` is positive definite and returns a lower-triangular
/// enclosure of its exact factor. Returns nullopt if a pivot interval fails
/// to be strictly positive.
std::optional<IntervalMatrix> cholesky_enclosure(const IntervalMatrix& p);

/// Enclosure of L^{-1} for a lower-triangular interval matrix via forward
/// substitution. Returns nullopt if a diagonal interval contains zero.
std::optional<IntervalMatrix> triangular_inverse_enclosure(const IntervalMatrix& l);

/// Gershgorin bounds (lambda_min lower bound, lambda_max upper bound) for a
/// symmetric interval matrix. Coarse but verified.
std::pair<double, double> gershgorin_bounds(const IntervalMatrix& sym);

/// Verified lift of the closed-form structured exponential e^{A_cont delta}:
/// only the (n_p + m)-sized augmented block [[A_p, B_p], [0, 0]] is
/// exponentiated; all other blocks of the result are exact identity/zero.
IntervalMatrix structured_exp_enclosure(const model::ClosedLoopSystem& sys,
                                        double delta);

}  // namespace iv
}  // namespace jitcert
