#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "jitcert/decomp.hpp"
#include "jitcert/interval.hpp"

namespace jitcert::pnorm {

/// Matrix norm induced by the quadratic form x' P x with P = K K'. Holds
/// the lower-triangular factor K and a verified enclosure of K^{-T};
/// construction fails unless the diagonal of K is strictly positive (the
/// implicit P > 0 check).
class EllipsoidNorm {
 public:
  static std::optional<EllipsoidNorm> from_cholesky(const Eigen::MatrixXd& k);

  const Eigen::MatrixXd& factor() const { return k_; }
  const iv::IntervalMatrix& factor_t() const { return k_t_; }
  const iv::IntervalMatrix& inv_factor_t() const { return k_inv_t_; }
  Eigen::Index dim() const { return k_.rows(); }

 private:
  Eigen::MatrixXd k_;
  iv::IntervalMatrix k_t_;
  iv::IntervalMatrix k_inv_t_;
};

/// Verified enclosure of ||A||_P = ||K' A K^{-T}||_sigma. Reduces to the
/// spectral norm for K = I.
iv::Interval pnorm(const EllipsoidNorm& norm, const iv::IntervalMatrix& a);
iv::Interval pnorm(const EllipsoidNorm& norm, const Eigen::MatrixXd& a);

/// Floating-point P-norm (no guarantees); used by the synthesis heuristic
/// and the fast approximate analysis.
double pnorm_float(const Eigen::MatrixXd& k, const Eigen::MatrixXd& a);

/// Verified upper bound h(delta_max) on ||M1 (e^{A s tau} - I) M2||_P over
/// all |tau| <= delta_max, via the truncated series
///   h(d) = ||M1|| ||M2|| (e^{||A|| d} - 1) + sum_{i=1..r} gamma_i d^i,
///   gamma_i = (||M1 A^i M2|| - ||M1|| ||A||^i ||M2||) / i!.
struct DeviationBound {
  decomp::ChannelId channel;
  double delta_max = 0.0;
  std::vector<iv::Interval> gamma;
  iv::Interval nM1, nM2, nA;
  iv::Interval value;  // h(delta_max); value = [0,0] when delta_max = 0
};

/// Exact P-norm of a rank-one matrix col*row:
/// ||K'(col row)K^{-T}|| = |K' col| * |row K^{-T}|.
iv::Interval pnorm_rank1(const EllipsoidNorm& norm, const iv::IntervalMatrix& col,
                         const iv::IntervalMatrix& row);

/// Precomputed norms shared across channels (||A_cont||_P is the same for
/// every channel, ||E_ctrl e^{A T/2}||_P for every actuator channel).
struct NormHints {
  const iv::Interval* nA = nullptr;
  const iv::Interval* nM1 = nullptr;
  const iv::Interval* nM2 = nullptr;
};

DeviationBound deviation_bound(const EllipsoidNorm& norm,
                               const decomp::VerifiedFactors& factors,
                               const decomp::ChannelId& channel,
                               double delta_max, int order = 10,
                               const NormHints& hints = {});

/// Floating-point evaluation of the same bound formula (heuristic use only).
double deviation_bound_float(const Eigen::MatrixXd& k,
                             const decomp::FactorForm& factors,
                             const Eigen::MatrixXd& a_cont, double delta_max,
                             int order = 10);

}  // namespace jitcert::pnorm
