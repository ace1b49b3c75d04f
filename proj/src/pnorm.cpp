#include "jitcert/pnorm.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace jitcert::pnorm {

std::optional<EllipsoidNorm> EllipsoidNorm::from_cholesky(
    const Eigen::MatrixXd& k) {
  if (k.rows() != k.cols()) return std::nullopt;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    if (!(k(i, i) > 0.0) || !std::isfinite(k(i, i))) return std::nullopt;

  EllipsoidNorm norm;
  norm.k_ = k;
  // Only the lower triangle of K is meaningful.
  Eigen::MatrixXd k_lower = k.triangularView<Eigen::Lower>();
  const auto inv =
      iv::triangular_inverse_enclosure(iv::IntervalMatrix::from_point(k_lower));
  if (!inv) return std::nullopt;
  norm.k_t_ = iv::IntervalMatrix::from_point(k_lower.transpose());
  norm.k_inv_t_ = inv->transpose();
  return norm;
}

iv::Interval pnorm(const EllipsoidNorm& norm, const iv::IntervalMatrix& a) {
  if (a.rows() != norm.dim() || a.cols() != norm.dim())
    throw std::invalid_argument("pnorm: dimension mismatch");
  const iv::IntervalMatrix transformed =
      iv::mul(iv::mul(norm.factor_t(), a), norm.inv_factor_t());
  return iv::spectral_norm_enclosure(transformed);
}

iv::Interval pnorm(const EllipsoidNorm& norm, const Eigen::MatrixXd& a) {
  return pnorm(norm, iv::IntervalMatrix::from_point(a));
}

double pnorm_float(const Eigen::MatrixXd& k, const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd y = k.transpose() * a;
  // z = y K^{-T}  <=>  K z' = y'
  const Eigen::MatrixXd z =
      k.triangularView<Eigen::Lower>().solve(y.transpose()).transpose();
  return z.jacobiSvd().singularValues()(0);
}

iv::Interval pnorm_rank1(const EllipsoidNorm& norm, const iv::IntervalMatrix& col,
                         const iv::IntervalMatrix& row) {
  const iv::IntervalMatrix a = iv::mul(norm.factor_t(), col);
  const iv::IntervalMatrix b = iv::mul(row, norm.inv_factor_t());
  iv::Interval sa{0.0, 0.0}, sb{0.0, 0.0};
  for (Eigen::Index i = 0; i < a.rows(); ++i) sa = iv::add(sa, iv::square(a(i, 0)));
  for (Eigen::Index j = 0; j < b.cols(); ++j) sb = iv::add(sb, iv::square(b(0, j)));
  return iv::mul(iv::sqrt(sa), iv::sqrt(sb));
}

DeviationBound deviation_bound(const EllipsoidNorm& norm,
                               const decomp::VerifiedFactors& factors,
                               const decomp::ChannelId& channel,
                               double delta_max, int order,
                               const NormHints& hints) {
  if (delta_max < 0.0)
    throw std::invalid_argument("deviation_bound: delta_max must be >= 0");
  if (order < 1) throw std::invalid_argument("deviation_bound: order must be >= 1");

  DeviationBound b;
  b.channel = channel;
  b.delta_max = delta_max;
  b.nM1 = hints.nM1 ? *hints.nM1
          : factors.m1_rank1
              ? pnorm_rank1(norm, factors.m1_rank1->col, factors.m1_rank1->row)
              : pnorm(norm, factors.M1);
  b.nM2 = hints.nM2 ? *hints.nM2
          : factors.m2_rank1
              ? pnorm_rank1(norm, factors.m2_rank1->col, factors.m2_rank1->row)
              : pnorm(norm, factors.M2);
  const iv::IntervalMatrix a_iv =
      iv::IntervalMatrix::from_point(factors.A_signed);
  // ||-A||_P = ||A||_P, so a hint computed for A_cont covers both signs.
  b.nA = hints.nA ? *hints.nA : pnorm(norm, a_iv);

  const iv::Interval delta = iv::Interval::point(delta_max);
  const iv::Interval n12 = iv::mul(b.nM1, b.nM2);

  // gamma_i = (||M1 A^i M2|| - ||M1|| ||A||^i ||M2||) / i!. The product
  // M1 A^i M2 is rank one whenever either factor is, which reduces each
  // term norm to two vector norms.
  enum class Path { kBothRank1, kM2Rank1, kM1Rank1, kGeneric };
  Path path = Path::kGeneric;
  iv::Interval base_rank1{0.0, 0.0};
  if (factors.m1_rank1 && factors.m2_rank1) {
    path = Path::kBothRank1;
    base_rank1 =
        pnorm_rank1(norm, factors.m1_rank1->col, factors.m2_rank1->row);
  } else if (factors.m2_rank1) {
    path = Path::kM2Rank1;
  } else if (factors.m1_rank1) {
    path = Path::kM1Rank1;
  }

  iv::IntervalMatrix a_pow_m2;  // generic: A^i M2
  iv::IntervalMatrix w_col;     // m2 rank1: A^i col2
  iv::IntervalMatrix w_row;     // m1 rank1: row1 A^i
  switch (path) {
    case Path::kBothRank1:
    case Path::kM2Rank1:
      w_col = factors.m2_rank1->col;
      break;
    case Path::kM1Rank1:
      w_row = factors.m1_rank1->row;
      break;
    case Path::kGeneric:
      a_pow_m2 = factors.M2;
      break;
  }

  iv::Interval na_pow = iv::Interval::point(1.0);
  iv::Interval fact = iv::Interval::point(1.0);
  iv::Interval delta_pow = iv::Interval::point(1.0);
  iv::Interval poly{0.0, 0.0};
  for (int i = 1; i <= order; ++i) {
    na_pow = iv::mul(na_pow, b.nA);
    fact = iv::mul(fact, iv::Interval::point(static_cast<double>(i)));
    delta_pow = iv::mul(delta_pow, delta);

    iv::Interval term_norm;
    switch (path) {
      case Path::kBothRank1: {
        w_col = iv::mul(a_iv, w_col);
        const iv::Interval s = iv::mul(factors.m1_rank1->row, w_col)(0, 0);
        term_norm = iv::mul(iv::abs(s), base_rank1);
        break;
      }
      case Path::kM2Rank1: {
        w_col = iv::mul(a_iv, w_col);
        term_norm =
            pnorm_rank1(norm, iv::mul(factors.M1, w_col), factors.m2_rank1->row);
        break;
      }
      case Path::kM1Rank1: {
        w_row = iv::mul(w_row, a_iv);
        term_norm =
            pnorm_rank1(norm, factors.m1_rank1->col, iv::mul(w_row, factors.M2));
        break;
      }
      case Path::kGeneric: {
        a_pow_m2 = iv::mul(a_iv, a_pow_m2);
        term_norm = pnorm(norm, iv::mul(factors.M1, a_pow_m2));
        break;
      }
    }
    const iv::Interval num = iv::sub(term_norm, iv::mul(n12, na_pow));
    const iv::Interval gamma_i = iv::div(num, fact);
    b.gamma.push_back(gamma_i);
    poly = iv::add(poly, iv::mul(gamma_i, delta_pow));
  }

  const iv::Interval expm1 =
      iv::sub(iv::exp(iv::mul(b.nA, delta)), iv::Interval::point(1.0));
  const iv::Interval h = iv::add(iv::mul(n12, expm1), poly);
  // h is a sum of nonnegative series terms, so clipping the lower endpoint
  // at zero keeps the enclosure valid.
  b.value = iv::clip_below(h, 0.0);
  if (delta_max == 0.0) b.value = {0.0, 0.0};
  return b;
}

double deviation_bound_float(const Eigen::MatrixXd& k,
                             const decomp::FactorForm& factors,
                             const Eigen::MatrixXd& a_cont, double delta_max,
                             int order) {
  const Eigen::MatrixXd a_signed = factors.sign * a_cont;
  const double n1 = pnorm_float(k, factors.M1);
  const double n2 = pnorm_float(k, factors.M2);
  const double na = pnorm_float(k, a_signed);

  double h = n1 * n2 * std::expm1(na * delta_max);
  Eigen::MatrixXd a_pow_m2 = factors.M2;
  double na_pow = 1.0, fact = 1.0, delta_pow = 1.0;
  for (int i = 1; i <= order; ++i) {
    a_pow_m2 = a_signed * a_pow_m2;
    na_pow *= na;
    fact *= static_cast<double>(i);
    delta_pow *= delta_max;
    h += (pnorm_float(k, factors.M1 * a_pow_m2) - n1 * na_pow * n2) / fact *
         delta_pow;
  }
  return std::max(h, 0.0);
}

}  // namespace jitcert::pnorm
