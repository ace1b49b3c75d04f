#include "jitcert/model.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <string>

namespace jitcert::model {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid closed-loop instance: " + what);
}

}  // namespace

void ClosedLoopSystem::validate() const {
  const Eigen::Index n_p = A_p.rows(), n_d = A_d.rows();
  const Eigen::Index p = C_p.rows(), m = B_p.cols();
  require(A_p.cols() == n_p, "A_p must be square");
  require(A_d.cols() == n_d, "A_d must be square");
  require(B_p.rows() == n_p, "B_p must have n_p rows");
  require(C_p.cols() == n_p, "C_p must have n_p columns");
  require(B_d.rows() == n_d && B_d.cols() == p, "B_d must be n_d x p");
  require(C_d.rows() == m && C_d.cols() == n_d, "C_d must be m x n_d");
  require(m >= 1, "at least one actuator is required");
  require(p >= 1, "at least one sensor is required");
  require(T > 0.0 && std::isfinite(T), "period T must be positive");
  require(dt_u_lo.size() == m && dt_u_hi.size() == m,
          "actuator timing bounds must have length m");
  require(dt_y_lo.size() == p && dt_y_hi.size() == p,
          "sensor timing bounds must have length p");
  auto check_window = [&](double lo, double hi, const std::string& name) {
    require(lo <= hi, name + ": lower bound exceeds upper bound");
    require(lo > -T / 2 && hi < T / 2,
            name + ": timing deviation bounds must be less than half a period");
  };
  for (Eigen::Index i = 0; i < m; ++i)
    check_window(dt_u_lo[i], dt_u_hi[i], "dt_u[" + std::to_string(i) + "]");
  for (Eigen::Index j = 0; j < p; ++j)
    check_window(dt_y_lo[j], dt_y_hi[j], "dt_y[" + std::to_string(j) + "]");
}

Eigen::MatrixXd event_matrix_u(const ClosedLoopSystem& sys, int i) {
  const AugmentedState st = AugmentedState::of(sys);
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(st.n(), st.n());
  // Row u_i is replaced by [0  C_d(i,:)  0  0]: the actuator latches C_d x_d.
  const Eigen::Index row = st.act() + i;
  e.row(row).setZero();
  e.block(row, st.ctrl(), 1, st.n_d) = sys.C_d.row(i);
  return e;
}

Eigen::MatrixXd event_matrix_y(const ClosedLoopSystem& sys, int j) {
  const AugmentedState st = AugmentedState::of(sys);
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(st.n(), st.n());
  // Row y_j is replaced by [C_p(j,:)  0  0  0]: the sensor samples the plant.
  const Eigen::Index row = st.meas() + j;
  e.row(row).setZero();
  e.block(row, st.plant(), 1, st.n_p) = sys.C_p.row(j);
  return e;
}

Eigen::MatrixXd event_matrix_ctrl(const ClosedLoopSystem& sys) {
  const AugmentedState st = AugmentedState::of(sys);
  Eigen::MatrixXd e = Eigen::MatrixXd::Identity(st.n(), st.n());
  e.block(st.ctrl(), st.ctrl(), st.n_d, st.n_d) = sys.A_d;
  e.block(st.ctrl(), st.meas(), st.n_d, st.p) = sys.B_d;
  return e;
}

LisSpec build_lis(const ClosedLoopSystem& sys) {
  sys.validate();
  const AugmentedState st = AugmentedState::of(sys);

  Eigen::MatrixXd a_cont = Eigen::MatrixXd::Zero(st.n(), st.n());
  a_cont.block(st.plant(), st.plant(), st.n_p, st.n_p) = sys.A_p;
  a_cont.block(st.plant(), st.act(), st.n_p, st.m) = sys.B_p;

  LisSpec spec{sys, a_cont, {}};
  spec.events.reserve(static_cast<size_t>(st.m + st.p + 1));
  for (int i = 0; i < st.m; ++i)
    spec.events.push_back({EventKind::kActuator, i, 0.0, event_matrix_u(sys, i)});
  for (int j = 0; j < st.p; ++j)
    spec.events.push_back({EventKind::kSensor, j, 0.0, event_matrix_y(sys, j)});
  spec.events.push_back(
      {EventKind::kController, 0, sys.T / 2, event_matrix_ctrl(sys)});
  return spec;
}

Eigen::MatrixXd structured_exp(const ClosedLoopSystem& sys, double delta) {
  const AugmentedState st = AugmentedState::of(sys);
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(st.n(), st.n());
  if (delta == 0.0) return result;

  const Eigen::Index na = st.n_p + st.m;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(na, na);
  aug.topLeftCorner(st.n_p, st.n_p) = sys.A_p * delta;
  aug.topRightCorner(st.n_p, st.m) = sys.B_p * delta;
  const Eigen::MatrixXd e_aug = aug.exp();

  result.block(st.plant(), st.plant(), st.n_p, st.n_p) =
      e_aug.topLeftCorner(st.n_p, st.n_p);
  result.block(st.plant(), st.act(), st.n_p, st.m) =
      e_aug.topRightCorner(st.n_p, st.m);
  return result;
}

}  // namespace jitcert::model
