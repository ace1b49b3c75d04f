#include "jitcert/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace jitcert::sdp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Instance {
  Index n = 0;
  std::vector<Block> blocks;
  double obj_sign = 1.0;  // maximize obj_sign * scalar
};

// Log-det barrier machinery over the variables (vech(P), scalar). The
// congruence structure of the blocks keeps gradient and Hessian assembly at
// a handful of n x n products per block.
class Barrier {
 public:
  explicit Barrier(const Instance& inst) : inst_(inst), n_(inst.n) {
    for (Index a = 0; a < n_; ++a)
      for (Index b = a; b < n_; ++b) {
        ia_.push_back(a);
        ib_.push_back(b);
      }
  }

  Index num_pvars() const { return static_cast<Index>(ia_.size()); }
  Index num_vars() const { return num_pvars() + 1; }
  Index cone_dim() const {
    return static_cast<Index>(inst_.blocks.size()) * n_;
  }

  MatrixXd unpack(const VectorXd& x) const {
    MatrixXd p(n_, n_);
    for (Index k = 0; k < num_pvars(); ++k) {
      p(ia_[k], ib_[k]) = x[k];
      p(ib_[k], ia_[k]) = x[k];
    }
    return p;
  }

  VectorXd pack(const MatrixXd& p, double scalar) const {
    VectorXd x(num_vars());
    for (Index k = 0; k < num_pvars(); ++k) x[k] = p(ia_[k], ib_[k]);
    x[num_pvars()] = scalar;
    return x;
  }

  MatrixXd block_value(const Block& blk, const MatrixXd& p, double scalar) const {
    MatrixXd f = blk.p_coeff * p;
    if (blk.constant.size() > 0) f += blk.constant;
    for (const CongruenceTerm& t : blk.terms)
      f.noalias() += t.sign * (t.M.transpose() * p * t.M);
    if (blk.gamma_coeff != 0.0)
      f.diagonal().array() += blk.gamma_coeff * scalar;
    return 0.5 * (f + f.transpose());
  }

  // Factorizes every block at x; returns false unless all are positive
  // definite. logdet receives sum_j logdet F_j.
  bool factorize(const VectorXd& x, std::vector<Eigen::LLT<MatrixXd>>* llts,
                 double* logdet) const {
    const MatrixXd p = unpack(x);
    const double scalar = x[num_pvars()];
    llts->clear();
    double ld = 0.0;
    for (const Block& blk : inst_.blocks) {
      const MatrixXd f = block_value(blk, p, scalar);
      if (!f.allFinite()) return false;
      Eigen::LLT<MatrixXd> llt(f);
      if (llt.info() != Eigen::Success) return false;
      const auto diag = llt.matrixLLT().diagonal().array();
      if ((diag <= 0.0).any()) return false;
      ld += 2.0 * diag.log().sum();
      llts->push_back(std::move(llt));
    }
    *logdet = ld;
    return true;
  }

  double objective(const VectorXd& x, double t_weight, double logdet) const {
    return -t_weight * inst_.obj_sign * x[num_pvars()] - logdet;
  }

  void derivatives(const std::vector<Eigen::LLT<MatrixXd>>& llts,
                   double t_weight, VectorXd* grad, MatrixXd* hess) const {
    const Index m = num_pvars();
    grad->setZero(num_vars());
    hess->setZero(num_vars(), num_vars());
    const MatrixXd eyeN = MatrixXd::Identity(n_, n_);

    struct Sandwich {
      double kappa;
      MatrixXd X, Y;  // contribution kappa * tr(X E Y E')
    };

    for (size_t j = 0; j < inst_.blocks.size(); ++j) {
      const Block& blk = inst_.blocks[j];
      MatrixXd w = llts[j].solve(eyeN);
      w = 0.5 * (w + w.transpose());
      const MatrixXd w2 = w * w;

      MatrixXd adj_w = blk.p_coeff * w;
      MatrixXd adj_w2 = blk.p_coeff * w2;
      for (const CongruenceTerm& t : blk.terms) {
        adj_w.noalias() += t.sign * (t.M * w * t.M.transpose());
        adj_w2.noalias() += t.sign * (t.M * w2 * t.M.transpose());
      }

      for (Index k = 0; k < m; ++k) {
        const Index a = ia_[k], b = ib_[k];
        (*grad)[k] -= (a == b) ? adj_w(a, a) : 2.0 * adj_w(a, b);
      }
      if (blk.gamma_coeff != 0.0) (*grad)[m] -= blk.gamma_coeff * w.trace();

      std::vector<Sandwich> parts;
      const double al = blk.p_coeff;
      if (al != 0.0) parts.push_back({al * al, w, w});
      for (const CongruenceTerm& t : blk.terms) {
        const MatrixXd mw = t.M * w;
        const MatrixXd wmt = w * t.M.transpose();
        if (al != 0.0) {
          parts.push_back({al * t.sign, wmt, mw});
          parts.push_back({al * t.sign, mw, wmt});
        }
      }
      for (const CongruenceTerm& t1 : blk.terms)
        for (const CongruenceTerm& t2 : blk.terms)
          parts.push_back({t1.sign * t2.sign, t2.M * w * t1.M.transpose(),
                           t1.M * w * t2.M.transpose()});

      for (Index k1 = 0; k1 < m; ++k1) {
        const Index a = ia_[k1], b = ib_[k1];
        for (Index k2 = k1; k2 < m; ++k2) {
          const Index c = ia_[k2], d = ib_[k2];
          double v = 0.0;
          for (const Sandwich& s : parts) {
            double term = s.Y(b, c) * s.X(d, a);
            if (a != b) term += s.Y(a, c) * s.X(d, b);
            if (c != d) term += s.Y(b, d) * s.X(c, a);
            if (a != b && c != d) term += s.Y(a, d) * s.X(c, b);
            v += s.kappa * term;
          }
          (*hess)(k1, k2) += v;
          if (k1 != k2) (*hess)(k2, k1) += v;
        }
      }

      if (blk.gamma_coeff != 0.0) {
        for (Index k = 0; k < m; ++k) {
          const Index a = ia_[k], b = ib_[k];
          const double v =
              blk.gamma_coeff * ((a == b) ? adj_w2(a, a) : 2.0 * adj_w2(a, b));
          (*hess)(k, m) += v;
          (*hess)(m, k) += v;
        }
        (*hess)(m, m) += blk.gamma_coeff * blk.gamma_coeff * w2.trace();
      }
    }

    (*grad)[m] -= t_weight * inst_.obj_sign;
  }

  const Instance& inst() const { return inst_; }
  Index n() const { return n_; }

 private:
  Instance inst_;
  Index n_;
  std::vector<Index> ia_, ib_;
};

bool solve_newton_system(const MatrixXd& hess, const VectorXd& grad,
                         VectorXd* step) {
  double ridge = 0.0;
  const double scale = std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 6; ++attempt) {
    MatrixXd h = hess;
    if (ridge > 0.0) h.diagonal().array() += ridge;
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      *step = llt.solve(-grad);
      if (step->allFinite()) return true;
    }
    ridge = (ridge == 0.0) ? 1e-12 * scale : ridge * 100.0;
  }
  return false;
}

enum class StageStatus { kConverged, kStalled, kFailed };

// One centering stage: damped Newton on -t*obj*scalar - sum logdet F_j.
StageStatus newton_stage(const Barrier& barrier, VectorXd* x, double t_weight,
                         const Options& opts) {
  std::vector<Eigen::LLT<MatrixXd>> llts;
  double logdet = 0.0;
  if (!barrier.factorize(*x, &llts, &logdet)) return StageStatus::kFailed;

  for (int it = 0; it < opts.max_newton; ++it) {
    VectorXd grad;
    MatrixXd hess;
    barrier.derivatives(llts, t_weight, &grad, &hess);
    VectorXd step;
    if (!solve_newton_system(hess, grad, &step)) return StageStatus::kFailed;

    const double decrement_sq = -grad.dot(step);
    if (decrement_sq / 2.0 < 1e-7) return StageStatus::kConverged;

    const double f0 = barrier.objective(*x, t_weight, logdet);
    const double slope = grad.dot(step);
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-14) {
      const VectorXd x_try = *x + alpha * step;
      std::vector<Eigen::LLT<MatrixXd>> llts_try;
      double logdet_try = 0.0;
      if (barrier.factorize(x_try, &llts_try, &logdet_try)) {
        const double f_try = barrier.objective(x_try, t_weight, logdet_try);
        if (f_try <= f0 + 0.25 * alpha * slope) {
          *x = x_try;
          llts = std::move(llts_try);
          logdet = logdet_try;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) return StageStatus::kStalled;
  }
  return StageStatus::kStalled;
}

struct PathResult {
  VectorXd x;
  bool ok = false;
  bool converged = false;
};

// Follows the central path of max obj_sign * scalar. early_exit, when
// nonzero, stops as soon as the scalar passes the threshold (used by
// Phase I, which only needs a strictly feasible point).
PathResult follow_path(const Barrier& barrier, VectorXd x, const Options& opts,
                       const double* early_exit_below) {
  PathResult result;
  const double nu = static_cast<double>(barrier.cone_dim());
  double t_weight = opts.t_init;
  for (int stage = 0; stage < 60; ++stage) {
    const StageStatus st = newton_stage(barrier, &x, t_weight, opts);
    if (st == StageStatus::kFailed) return result;
    result.x = x;
    result.ok = true;
    const double scalar = x[x.size() - 1];
    if (early_exit_below && scalar <= *early_exit_below) {
      result.converged = true;
      return result;
    }
    if (nu / t_weight < opts.tol * std::max(1.0, std::fabs(scalar))) {
      result.converged = true;
      return result;
    }
    if (st == StageStatus::kStalled && stage > 0) return result;
    t_weight *= opts.t_scale;
    if (t_weight > 1e18) {
      result.converged = true;
      return result;
    }
  }
  result.converged = true;
  return result;
}

}  // namespace

Solution solve(const Problem& problem, double gamma_floor, const Options& opts) {
  Solution sol;
  if (problem.n <= 0 || problem.blocks.empty()) return sol;
  const Index n = problem.n;

  // Phase I: maximize -s over blocks F_j(P, gamma_floor) + s I >= 0.
  Instance phase1;
  phase1.n = n;
  phase1.obj_sign = -1.0;
  for (const Block& blk : problem.blocks) {
    Block b = blk;
    if (b.gamma_coeff != 0.0) {
      MatrixXd c = b.constant.size() > 0 ? b.constant
                                         : MatrixXd::Zero(n, n).eval();
      c.diagonal().array() += b.gamma_coeff * gamma_floor;
      b.constant = c;
    }
    b.gamma_coeff = 1.0;
    phase1.blocks.push_back(std::move(b));
  }
  Barrier barrier1(phase1);

  const MatrixXd p0 =
      0.5 * (1.0 + std::max(gamma_floor, 0.0)) * MatrixXd::Identity(n, n);
  double worst = 0.0;
  for (const Block& blk : phase1.blocks) {
    MatrixXd f = barrier1.block_value(blk, p0, 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(f, Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff());
  }
  const double s0 = -worst + 0.5 * std::max(1.0, -worst);
  VectorXd x1 = barrier1.pack(p0, s0);

  const double exit_below = -1e-4;
  const PathResult r1 = follow_path(barrier1, x1, opts, &exit_below);
  if (!r1.ok) return sol;  // numerical failure before any feasible point
  const double slack = r1.x[r1.x.size() - 1];
  if (!(slack < -opts.feas_margin)) {
    sol.converged = r1.converged;
    return sol;  // infeasible (or could not be certified feasible)
  }

  // Phase II: maximize gamma from the strictly feasible Phase-I point.
  Instance phase2{n, problem.blocks, +1.0};
  bool has_gamma = false;
  for (const Block& blk : phase2.blocks)
    if (blk.gamma_coeff != 0.0) has_gamma = true;
  Barrier barrier2(phase2);

  const MatrixXd p1 = barrier1.unpack(r1.x);
  if (!has_gamma) {
    // Pure feasibility problem; the Phase-I point is the answer.
    sol.P = p1;
    sol.gamma = gamma_floor;
    sol.feasible = true;
    sol.converged = true;
    return sol;
  }
  double gamma0 = gamma_floor;
  if (has_gamma) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p1, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    gamma0 = gamma_floor + 0.5 * std::max(0.0, lmin - gamma_floor);
  }
  VectorXd x2 = barrier2.pack(p1, gamma0);
  std::vector<Eigen::LLT<MatrixXd>> probe;
  double probe_logdet = 0.0;
  if (!barrier2.factorize(x2, &probe, &probe_logdet)) {
    // Fall back to the certified Phase-I point at gamma_floor offsets.
    x2 = barrier2.pack(p1, gamma_floor - std::fabs(slack));
    if (!barrier2.factorize(x2, &probe, &probe_logdet)) {
      sol.feasible = true;
      sol.P = p1;
      sol.gamma = gamma_floor;
      return sol;
    }
  }

  const PathResult r2 = follow_path(barrier2, x2, opts, nullptr);
  if (!r2.ok) {
    sol.feasible = true;
    sol.P = p1;
    sol.gamma = gamma0;
    return sol;
  }
  sol.P = barrier2.unpack(r2.x);
  sol.gamma = r2.x[r2.x.size() - 1];
  sol.feasible = true;
  sol.converged = r2.converged;
  return sol;
}

}  // namespace jitcert::sdp
