#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "jitcert/decomp.hpp"
#include "jitcert/interval.hpp"
#include "jitcert/model.hpp"

namespace jitcert::verify {

enum class Verdict { kStable, kUnknown };

/// Continuous-time decay data derived from a discrete contraction bound
/// rho~ < 1: lambda = ln(rho~)/T, the per-period overshoot constants
/// C_ev (largest event-matrix spectral bound), C_bar = C_ev^{m+p} and
/// lambda_bar >= ||A_cont||_sigma.
struct CgesConstants {
  double lambda = 0.0;
  double C_ev = 1.0;
  double C_bar = 1.0;
  double lambda_bar = 0.0;
};

CgesConstants cges_constants(const model::ClosedLoopSystem& sys,
                             double rho_tilde_upper);

struct ChannelBound {
  decomp::ChannelId channel;
  double delta_max = 0.0;
  iv::Interval bound;
};

/// Machine-checkable stability certificate: interval factor of P, verified
/// nominal contraction rho_n, per-channel deviation bounds, their total
/// rho~, and (when rho~ < 1) the continuous-time decay constants.
struct Certificate {
  iv::IntervalMatrix K;
  iv::Interval rho_n;
  std::vector<ChannelBound> bounds;
  iv::Interval rho_tilde;
  Verdict verdict = Verdict::kUnknown;
  std::string reason;  // set when verdict == kUnknown
  std::optional<CgesConstants> cges;
  // Verified bound on sqrt(cond(P)) = c2/c1 relating |x| and sqrt(x'Px);
  // the CGES constant is D = cond_sqrt * C_bar * e^{lambda_bar T}.
  double cond_sqrt = 0.0;
  double D = 0.0;
  std::vector<ChannelBound> sensitivity;  // descending by bound upper endpoint
};

struct CertifyOptions {
  int bound_order = 10;
};

/// Evaluates the full norm-bounding inequality in interval arithmetic for
/// P = K K'. Any origin of K is acceptable; the certificate stands on its
/// own. Returns verdict kUnknown (never "unstable") when the inequality
/// cannot be verified.
Certificate certify(const model::ClosedLoopSystem& sys,
                    const Eigen::MatrixXd& P_factor,
                    const CertifyOptions& opts = {});

/// Channels ranked by deviation-bound upper endpoint (descending); ties
/// broken by kind (U, Y, UY), then indices.
std::vector<ChannelBound> sensitivity_report(const Certificate& cert);

/// Fast unverified analysis: each deviation bound is replaced by the
/// floating-point maximum of ||dA(tau)||_P over `samples` evenly spaced
/// tau. Always <= the verified rho~ upper endpoint.
struct ApproxResult {
  double rho_n = 0.0;
  double rho_tilde = 0.0;
  std::vector<std::pair<decomp::ChannelId, double>> channel_max;
};

ApproxResult approx_certify(const model::ClosedLoopSystem& sys,
                            const Eigen::MatrixXd& P_factor, int samples = 100);

}  // namespace jitcert::verify
