#pragma once

#include <Eigen/Dense>

#include <random>

#include "jitcert/model.hpp"

namespace jitcert::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937& rng, int r, int c,
                                     double scale = 1.0) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = scale * g(rng);
  return m;
}

/// Random closed-loop instance (not necessarily stable) with timing windows
/// inside (-frac*T/2, frac*T/2).
inline model::ClosedLoopSystem random_system(std::mt19937& rng, int n_p, int n_d,
                                             int p, int m, double T = 1.0,
                                             double window_frac = 0.4) {
  model::ClosedLoopSystem sys;
  sys.A_p = random_matrix(rng, n_p, n_p);
  sys.B_p = random_matrix(rng, n_p, m);
  sys.C_p = random_matrix(rng, p, n_p);
  sys.A_d = random_matrix(rng, n_d, n_d, 0.5);
  sys.B_d = random_matrix(rng, n_d, p, 0.5);
  sys.C_d = random_matrix(rng, m, n_d, 0.5);
  sys.T = T;
  std::uniform_real_distribution<double> u(-window_frac * T / 2,
                                           window_frac * T / 2);
  sys.dt_u_lo.resize(m);
  sys.dt_u_hi.resize(m);
  sys.dt_y_lo.resize(p);
  sys.dt_y_hi.resize(p);
  for (int i = 0; i < m; ++i) {
    double a = u(rng), b = u(rng);
    sys.dt_u_lo[i] = std::min(a, b);
    sys.dt_u_hi[i] = std::max(a, b);
  }
  for (int j = 0; j < p; ++j) {
    double a = u(rng), b = u(rng);
    sys.dt_y_lo[j] = std::min(a, b);
    sys.dt_y_hi[j] = std::max(a, b);
  }
  return sys;
}

inline model::ClosedLoopSystem random_system(std::mt19937& rng,
                                             int max_size = 3) {
  std::uniform_int_distribution<int> d(1, max_size);
  return random_system(rng, d(rng), d(rng), d(rng), d(rng));
}

/// Admissible random timing vector [dt_u; dt_y] for a system.
inline Eigen::VectorXd random_timing(std::mt19937& rng,
                                     const model::ClosedLoopSystem& sys) {
  const Eigen::Index m = sys.num_inputs(), p = sys.num_outputs();
  Eigen::VectorXd t(m + p);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::uniform_real_distribution<double> u(sys.dt_u_lo[i], sys.dt_u_hi[i]);
    t[i] = u(rng);
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    std::uniform_real_distribution<double> u(sys.dt_y_lo[j], sys.dt_y_hi[j]);
    t[m + j] = u(rng);
  }
  return t;
}

/// Random well-conditioned lower-triangular Cholesky factor.
inline Eigen::MatrixXd random_cholesky_factor(std::mt19937& rng, int n) {
  Eigen::MatrixXd k = random_matrix(rng, n, n, 0.3).triangularView<Eigen::Lower>();
  std::uniform_real_distribution<double> d(0.5, 2.0);
  for (int i = 0; i < n; ++i) k(i, i) = d(rng);
  return k;
}

/// Double-integrator plant with separately sampled position/velocity
/// sensors and a one-period-delayed state feedback: the standard stable
/// benchmark (m = 1, p = 2, n = 7). Gains tuned for a nominal spectral
/// radius near 0.7 at T = 0.1; the default jitter window is T/200 per
/// channel, which certifies with margin.
inline model::ClosedLoopSystem double_integrator_benchmark(
    double jitter_scale = 1.0, double T = 0.1) {
  model::ClosedLoopSystem sys;
  sys.A_p.setZero(2, 2);
  sys.A_p(0, 1) = 1.0;
  sys.B_p.setZero(2, 1);
  sys.B_p(1, 0) = 1.0;
  sys.C_p = Eigen::MatrixXd::Identity(2, 2);
  sys.A_d.setZero(2, 2);
  sys.B_d = Eigen::MatrixXd::Identity(2, 2);
  sys.C_d.resize(1, 2);
  sys.C_d << -4.6, -3.4;
  sys.T = T;
  const double w = jitter_scale * T / 200.0;
  sys.dt_u_lo = Eigen::VectorXd::Constant(1, -w);
  sys.dt_u_hi = Eigen::VectorXd::Constant(1, w);
  sys.dt_y_lo = Eigen::VectorXd::Constant(2, -w);
  sys.dt_y_hi = Eigen::VectorXd::Constant(2, w);
  return sys;
}

/// The benchmark padded with a redundant position sensor (p = 3, n = 8),
/// sized so that block-diagonal doubling reaches n = 16 and n = 32.
inline model::ClosedLoopSystem redundant_sensor_benchmark(
    double jitter_scale = 1.0, double T = 0.1) {
  model::ClosedLoopSystem sys = double_integrator_benchmark(jitter_scale, T);
  Eigen::MatrixXd c_p(3, 2);
  c_p << 1, 0, 0, 1, 1, 0;
  sys.C_p = c_p;
  Eigen::MatrixXd b_d(2, 3);
  b_d << 1, 0, 0, 0, 1, 0;
  sys.B_d = b_d;
  const double w = jitter_scale * T / 200.0;
  sys.dt_y_lo = Eigen::VectorXd::Constant(3, -w);
  sys.dt_y_hi = Eigen::VectorXd::Constant(3, w);
  return sys;
}

/// Block-diagonal doubling: two decoupled copies of `sys` ("2n trick").
inline model::ClosedLoopSystem doubled(const model::ClosedLoopSystem& sys) {
  auto blkdiag = [](const Eigen::MatrixXd& a) {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * a.rows(), 2 * a.cols());
    r.topLeftCorner(a.rows(), a.cols()) = a;
    r.bottomRightCorner(a.rows(), a.cols()) = a;
    return r;
  };
  auto stack2 = [](const Eigen::VectorXd& v) {
    Eigen::VectorXd r(2 * v.size());
    r << v, v;
    return r;
  };
  model::ClosedLoopSystem d;
  d.A_p = blkdiag(sys.A_p);
  d.B_p = blkdiag(sys.B_p);
  d.C_p = blkdiag(sys.C_p);
  d.A_d = blkdiag(sys.A_d);
  d.B_d = blkdiag(sys.B_d);
  d.C_d = blkdiag(sys.C_d);
  d.T = sys.T;
  d.dt_u_lo = stack2(sys.dt_u_lo);
  d.dt_u_hi = stack2(sys.dt_u_hi);
  d.dt_y_lo = stack2(sys.dt_y_lo);
  d.dt_y_hi = stack2(sys.dt_y_hi);
  return d;
}

}  // namespace jitcert::testing
