#pragma once

#include <Eigen/Core>

#include <vector>

#include "jitcert/decomp.hpp"
#include "jitcert/model.hpp"
#include "jitcert/sdp.hpp"

namespace jitcert::synth {

enum class Status { kOk, kInfeasible, kNumericalFailure };

struct SynthesisResult {
  Eigen::MatrixXd K;   // lower-triangular factor, P = K K'
  double gamma = 0.0;  // achieved robustness margin (lambda_min of P after
                       // normalization lambda_max(P) < 1)
  Status status = Status::kNumericalFailure;
};

struct SynthesisProblem {
  Eigen::MatrixXd A_nom;
  std::vector<Eigen::MatrixXd> deviation_set;
  double rho_bar = 1.0;  // contraction target for the nominal matrix
  double beta = 0.0;     // norm budget per deviation matrix
};

double spectral_radius(const Eigen::MatrixXd& a);

/// Baseline P from the discrete Lyapunov (Stein) equation
/// (A/rho_bar)' P (A/rho_bar) - P = -I, solved by Smith's doubling
/// iteration. Guarantees ||A||_P <= rho_bar up to floating error.
SynthesisResult lyapunov_P(const Eigen::MatrixXd& a, double rho_bar);

/// LMI feasibility: find P maximizing gamma subject to
///   A' P A < rho_bar^2 P,   D' P D < beta^2 P  (D in deviation_set),
///   gamma I < P < I.
SynthesisResult lmi_P(const SynthesisProblem& prob, double gamma_floor = 0.0,
                      const sdp::Options& opts = {});

/// State transformation A~ = R^{-1} A R with R^{-1} = (P_nominal^{1/2})'
/// from the nominal LMI (rho_bar = 1, no deviations), giving ||A~||_sigma < 1.
struct Preconditioner {
  Eigen::MatrixXd R_inv;  // upper triangular
  Eigen::MatrixXd R;      // its inverse
  Eigen::MatrixXd A_tilde;
  std::vector<Eigen::MatrixXd> devs_tilde;
  Status status = Status::kNumericalFailure;
};

Preconditioner precondition(const Eigen::MatrixXd& a,
                            const std::vector<Eigen::MatrixXd>& devs,
                            const sdp::Options& opts = {});

/// Undoes the preconditioning on the Cholesky factor:
/// (P^{1/2})' = (P~^{1/2})' R^{-1}. `k_tilde` is the lower factor of P~;
/// the returned matrix is the upper factor (P^{1/2})'.
Eigen::MatrixXd inverse_transform_cholesky(const Eigen::MatrixXd& k_tilde,
                                           const Eigen::MatrixXd& r_inv);

/// The eight extreme deviation matrices A(dt) - A(0) for dt_u and dt_y each
/// at {lo, 0, hi} (applied uniformly per side), origin excluded.
std::vector<Eigen::MatrixXd> extreme_deviation_set(const decomp::Decomposition& dec);

/// One step of the beta heuristic (exposed for testing): shrinks the
/// damping factor when the margin gamma collapses and rescales beta from
/// the achieved nominal contraction.
struct HeuristicState {
  double beta;
  double delta_h;
};
HeuristicState heuristic_update(HeuristicState state, double gamma,
                                double norm_a, double rho_bar);

struct BetaSearchOptions {
  int iterations = 3;
  int bound_order = 10;
  sdp::Options sdp;
};

struct BetaSearchIteration {
  double beta = 0.0;
  double gamma = 0.0;
  double norm_a = 0.0;
  double rho_tilde = 0.0;
  Status status = Status::kNumericalFailure;
};

struct BetaSearchResult {
  SynthesisResult synthesis;
  double rho_spectral = 0.0;   // float spectral radius of A(0)
  double rho_bar = 0.0;        // 0.8 + 0.2 rho{A}
  double beta0 = 0.0;          // (1/4)(1 - rho_bar)/(m + p + mp)
  double rho_tilde_float = 0.0;
  bool fallback_lyapunov = false;
  std::vector<BetaSearchIteration> trace;
};

/// Synthesizes P for the certificate: fixed rho_bar = 0.8 + 0.2 rho{A},
/// three preconditioned LMI solves with the beta update rule, keeping the
/// P with the lowest (floating) rho~; falls back to lyapunov_P when every
/// LMI attempt fails.
BetaSearchResult beta_search(const model::ClosedLoopSystem& sys,
                             const decomp::Decomposition& dec,
                             const BetaSearchOptions& opts = {});

}  // namespace jitcert::synth
