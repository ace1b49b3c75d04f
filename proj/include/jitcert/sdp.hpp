#pragma once

#include <Eigen/Core>

#include <vector>

namespace jitcert::sdp {

/// One congruence term s * M' P M of a constraint block.
struct CongruenceTerm {
  double sign;
  Eigen::MatrixXd M;
};

/// Affine matrix constraint
///   F(P, g) = constant + p_coeff * P + sum_t s_t M_t' P M_t + g_coeff * g * I  >= 0
/// in the symmetric matrix variable P and optional scalar variable g.
struct Block {
  Eigen::MatrixXd constant;  // may be 0x0 for zero
  double p_coeff = 0.0;
  std::vector<CongruenceTerm> terms;
  double gamma_coeff = 0.0;
};

struct Problem {
  Eigen::Index n = 0;  // dimension of P
  std::vector<Block> blocks;
};

struct Options {
  double tol = 1e-9;         // duality-measure stopping threshold
  double t_init = 1.0;       // initial barrier weight
  double t_scale = 25.0;     // barrier weight growth per stage
  int max_newton = 50;       // Newton iterations per stage
  double feas_margin = 1e-9; // Phase-I margin certifying strict feasibility
};

struct Solution {
  Eigen::MatrixXd P;
  double gamma = 0.0;
  bool feasible = false;
  bool converged = false;
};

/// Maximizes the scalar variable g over the feasible set of `problem` with
/// a two-phase log-det barrier method (damped Newton, long steps). Phase I
/// maximizes a uniform slack to find a strictly feasible start; Phase II
/// follows the central path of max g. Suitable for the small dense
/// problems that arise here (n up to a few tens).
Solution solve(const Problem& problem, double gamma_floor, const Options& opts = {});

}  // namespace jitcert::sdp
