#include "jitcert/synth.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "jitcert/pnorm.hpp"

namespace jitcert::synth {

namespace {

using Eigen::MatrixXd;

// rho{A} <= ||A||_P for every P (submultiplicative norm bound), so a
// synthesized P with a smaller P-norm signals a numerics bug.
bool violates_spectral_floor(const MatrixXd& k, const MatrixXd& a) {
  return pnorm::pnorm_float(k, a) < spectral_radius(a) - 1e-6;
}

// Floating rho~ = ||A(0)||_P + sum of per-channel bounds; ranks candidate
// P matrices inside the heuristic (the certificate recomputes everything
// in interval arithmetic).
double rho_tilde_float_for(const model::ClosedLoopSystem& sys,
                           const decomp::Decomposition& dec, const MatrixXd& k,
                           int order) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  MatrixXd a_cont = MatrixXd::Zero(st.n(), st.n());
  a_cont.block(st.plant(), st.plant(), st.n_p, st.n_p) = sys.A_p;
  a_cont.block(st.plant(), st.act(), st.n_p, st.m) = sys.B_p;

  double rho = pnorm::pnorm_float(k, dec.nominal());
  for (const decomp::ChannelId& id : dec.channels()) {
    const double dmax = dec.delta_max(id);
    if (dmax == 0.0) continue;
    rho += pnorm::deviation_bound_float(k, dec.factor_form(id), a_cont, dmax,
                                        order);
  }
  return rho;
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& a) {
  return a.eigenvalues().cwiseAbs().maxCoeff();
}

SynthesisResult lyapunov_P(const Eigen::MatrixXd& a, double rho_bar) {
  SynthesisResult result;
  if (a.rows() != a.cols())
    throw std::invalid_argument("lyapunov_P: matrix must be square");
  if (!(rho_bar > 0.0)) throw std::invalid_argument("lyapunov_P: rho_bar <= 0");
  const Eigen::Index n = a.rows();

  if (!(spectral_radius(a) < rho_bar)) {
    result.status = Status::kInfeasible;
    return result;
  }

  // Smith doubling for (A/rho)' P (A/rho) - P = -I:
  //   P <- P + M' P M,  M <- M^2  sums 2^j terms of sum_k (As')^k As^k.
  MatrixXd p = MatrixXd::Identity(n, n);
  MatrixXd m = a / rho_bar;
  for (int it = 0; it < 200; ++it) {
    if (!m.allFinite() || !p.allFinite()) {
      result.status = Status::kNumericalFailure;
      return result;
    }
    if (m.norm() < 1e-14) break;
    p = p + m.transpose() * p * m;
    m = m * m;
  }
  p = 0.5 * (p + p.transpose());

  Eigen::LLT<MatrixXd> llt(p);
  if (llt.info() != Eigen::Success) {
    result.status = Status::kNumericalFailure;
    return result;
  }
  result.K = llt.matrixL();
  if (violates_spectral_floor(result.K, a)) {
    result.status = Status::kNumericalFailure;
    return result;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(p, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().maxCoeff();
  result.gamma = es.eigenvalues().minCoeff() / lmax;  // after P/lmax scaling
  result.status = Status::kOk;
  return result;
}

SynthesisResult lmi_P(const SynthesisProblem& prob, double gamma_floor,
                      const sdp::Options& opts) {
  SynthesisResult result;
  const Eigen::Index n = prob.A_nom.rows();
  if (prob.A_nom.cols() != n)
    throw std::invalid_argument("lmi_P: A_nom must be square");
  if (!(prob.rho_bar > 0.0)) throw std::invalid_argument("lmi_P: rho_bar <= 0");

  sdp::Problem sdp_prob;
  sdp_prob.n = n;
  // Blocks are normalized to O(1): P - M' P M > 0 with M = A/rho (resp.
  // D/beta), plus the conditioning box gamma I < P < I.
  {
    sdp::Block b;
    b.p_coeff = 1.0;
    b.terms.push_back({-1.0, prob.A_nom / prob.rho_bar});
    sdp_prob.blocks.push_back(std::move(b));
  }
  for (const MatrixXd& d : prob.deviation_set) {
    if (prob.beta <= 0.0) {
      if (d.norm() == 0.0) continue;  // trivially satisfied
      result.status = Status::kInfeasible;
      return result;
    }
    sdp::Block b;
    b.p_coeff = 1.0;
    b.terms.push_back({-1.0, d / prob.beta});
    sdp_prob.blocks.push_back(std::move(b));
  }
  {
    sdp::Block upper;  // I - P
    upper.constant = MatrixXd::Identity(n, n);
    upper.p_coeff = -1.0;
    sdp_prob.blocks.push_back(std::move(upper));
    sdp::Block lower;  // P - gamma I
    lower.p_coeff = 1.0;
    lower.gamma_coeff = -1.0;
    sdp_prob.blocks.push_back(std::move(lower));
  }

  const sdp::Solution sol = sdp::solve(sdp_prob, gamma_floor, opts);
  if (!sol.feasible) {
    result.status = sol.converged ? Status::kInfeasible : Status::kNumericalFailure;
    return result;
  }
  if (!(sol.gamma > gamma_floor)) {
    result.status = Status::kInfeasible;
    return result;
  }

  Eigen::LLT<MatrixXd> llt(0.5 * (sol.P + sol.P.transpose()));
  if (llt.info() != Eigen::Success) {
    result.status = Status::kNumericalFailure;
    return result;
  }
  result.K = llt.matrixL();
  if (violates_spectral_floor(result.K, prob.A_nom)) {
    result.status = Status::kNumericalFailure;
    return result;
  }
  result.gamma = sol.gamma;
  result.status = Status::kOk;
  return result;
}

Preconditioner precondition(const Eigen::MatrixXd& a,
                            const std::vector<Eigen::MatrixXd>& devs,
                            const sdp::Options& opts) {
  Preconditioner pre;
  SynthesisProblem nominal;
  nominal.A_nom = a;
  nominal.rho_bar = 1.0;
  nominal.beta = 0.0;
  const SynthesisResult res = lmi_P(nominal, 0.0, opts);
  if (res.status != Status::kOk) {
    pre.status = res.status;
    return pre;
  }

  const Eigen::Index n = a.rows();
  pre.R_inv = res.K.transpose();
  pre.R = pre.R_inv.triangularView<Eigen::Upper>().solve(
      MatrixXd::Identity(n, n));
  pre.A_tilde = pre.R_inv * a * pre.R;
  for (const MatrixXd& d : devs) pre.devs_tilde.push_back(pre.R_inv * d * pre.R);
  pre.status = Status::kOk;
  return pre;
}

Eigen::MatrixXd inverse_transform_cholesky(const Eigen::MatrixXd& k_tilde,
                                           const Eigen::MatrixXd& r_inv) {
  return k_tilde.transpose() * r_inv;
}

std::vector<Eigen::MatrixXd> extreme_deviation_set(
    const decomp::Decomposition& dec) {
  const model::ClosedLoopSystem& sys = dec.system();
  const model::AugmentedState st = model::AugmentedState::of(sys);
  std::vector<Eigen::MatrixXd> devs;
  for (int cu = 0; cu < 3; ++cu) {
    for (int cy = 0; cy < 3; ++cy) {
      if (cu == 1 && cy == 1) continue;  // origin
      Eigen::VectorXd timing = Eigen::VectorXd::Zero(st.m + st.p);
      for (Eigen::Index i = 0; i < st.m; ++i)
        timing[i] = (cu == 0) ? sys.dt_u_lo[i] : (cu == 2) ? sys.dt_u_hi[i] : 0.0;
      for (Eigen::Index j = 0; j < st.p; ++j)
        timing[st.m + j] =
            (cy == 0) ? sys.dt_y_lo[j] : (cy == 2) ? sys.dt_y_hi[j] : 0.0;
      devs.push_back(dec.sum(timing) - dec.nominal());
    }
  }
  return devs;
}

HeuristicState heuristic_update(HeuristicState state, double gamma,
                                double norm_a, double rho_bar) {
  if (gamma < 1e-5) state.delta_h *= 0.45;
  const double denom = rho_bar - norm_a;
  if (denom > 1e-12 && norm_a < 1.0) {
    state.beta = state.delta_h * state.beta * (1.0 - norm_a) / denom;
  } else {
    state.beta /= 4.0;
  }
  return state;
}

BetaSearchResult beta_search(const model::ClosedLoopSystem& sys,
                             const decomp::Decomposition& dec,
                             const BetaSearchOptions& opts) {
  BetaSearchResult out;
  const model::AugmentedState st = model::AugmentedState::of(sys);
  const double channels = static_cast<double>(st.m + st.p + st.m * st.p);

  out.rho_spectral = spectral_radius(dec.nominal());
  if (!(out.rho_spectral < 1.0)) {
    out.synthesis.status = Status::kInfeasible;
    return out;
  }
  out.rho_bar = 0.8 + 0.2 * out.rho_spectral;
  out.beta0 = 0.25 * (1.0 - out.rho_bar) / channels;

  const std::vector<MatrixXd> devs = extreme_deviation_set(dec);
  const Preconditioner pre = precondition(dec.nominal(), devs, opts.sdp);
  if (pre.status != Status::kOk) {
    const SynthesisResult fb = lyapunov_P(dec.nominal(), out.rho_bar);
    out.synthesis = fb;
    out.fallback_lyapunov = true;
    if (fb.status == Status::kOk)
      out.rho_tilde_float = rho_tilde_float_for(sys, dec, fb.K, opts.bound_order);
    return out;
  }

  HeuristicState state{out.beta0, 2.0};
  double best_rho = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opts.iterations; ++it) {
    BetaSearchIteration step;
    step.beta = state.beta;

    SynthesisProblem prob{pre.A_tilde, pre.devs_tilde, out.rho_bar, state.beta};
    const SynthesisResult res = lmi_P(prob, 0.0, opts.sdp);
    step.status = res.status;
    if (res.status != Status::kOk) {
      state.beta /= 4.0;  // retry with smaller beta
      out.trace.push_back(step);
      continue;
    }

    const MatrixXd k =
        inverse_transform_cholesky(res.K, pre.R_inv).transpose().eval();
    step.gamma = res.gamma;
    step.norm_a = pnorm::pnorm_float(k, dec.nominal());
    if (step.norm_a > 1.0) {
      // Probably unstable at this beta; retry with smaller beta.
      state.beta /= 4.0;
      out.trace.push_back(step);
      continue;
    }
    step.rho_tilde = rho_tilde_float_for(sys, dec, k, opts.bound_order);

    if (step.rho_tilde < best_rho) {
      best_rho = step.rho_tilde;
      out.synthesis.K = k;
      out.synthesis.gamma = res.gamma;
      out.synthesis.status = Status::kOk;
      out.rho_tilde_float = step.rho_tilde;
    }
    state = heuristic_update(state, res.gamma, step.norm_a, out.rho_bar);
    out.trace.push_back(step);
  }

  if (out.synthesis.status != Status::kOk) {
    const SynthesisResult fb = lyapunov_P(dec.nominal(), out.rho_bar);
    out.synthesis = fb;
    out.fallback_lyapunov = true;
    if (fb.status == Status::kOk)
      out.rho_tilde_float = rho_tilde_float_for(sys, dec, fb.K, opts.bound_order);
  }
  return out;
}

}  // namespace jitcert::synth
