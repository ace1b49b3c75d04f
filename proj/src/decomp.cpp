#include "jitcert/decomp.hpp"

#include <stdexcept>

namespace jitcert::decomp {

Decomposition::Decomposition(model::ClosedLoopSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  const model::AugmentedState st = model::AugmentedState::of(sys_);
  const Eigen::Index n = st.n();

  e_ctrl_ = model::event_matrix_ctrl(sys_);
  e_half_ = model::structured_exp(sys_, sys_.T / 2);
  m1_u_ = e_ctrl_ * e_half_;

  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < st.m; ++i)
    eu_delta_.push_back(model::event_matrix_u(sys_, i) - eye);
  for (int j = 0; j < st.p; ++j)
    ey_delta_.push_back(model::event_matrix_y(sys_, j) - eye);

  // A(0) = E_ctrl e^{A T/2} (I + sum (E_u_i - I) + sum (E_y_j - I)) e^{A T/2}
  Eigen::MatrixXd mid = eye;
  for (const Eigen::MatrixXd& d : eu_delta_) mid += d;
  for (const Eigen::MatrixXd& d : ey_delta_) mid += d;
  nominal_ = m1_u_ * mid * e_half_;

  for (int i = 0; i < st.m; ++i) channels_.push_back({Kind::kActuator, i, 0});
  for (int j = 0; j < st.p; ++j) channels_.push_back({Kind::kSensor, 0, j});
  for (int i = 0; i < st.m; ++i)
    for (int j = 0; j < st.p; ++j)
      channels_.push_back({Kind::kActuatorSensor, i, j});
}

FactorForm Decomposition::factor_form(const ChannelId& id) const {
  switch (id.kind) {
    case Kind::kActuator:
      return {m1_u_, eu_delta_[static_cast<size_t>(id.i)], -1.0};
    case Kind::kSensor:
      return {e_ctrl_ * ey_delta_[static_cast<size_t>(id.j)] * e_half_,
              Eigen::MatrixXd::Identity(sys_.n(), sys_.n()), +1.0};
    case Kind::kActuatorSensor:
      return {e_ctrl_ * ey_delta_[static_cast<size_t>(id.j)],
              eu_delta_[static_cast<size_t>(id.i)], +1.0};
  }
  throw std::logic_error("unreachable");
}

Eigen::MatrixXd Decomposition::deviation(const ChannelId& id, double tau) const {
  const Eigen::Index n = sys_.n();
  if (id.kind == Kind::kActuatorSensor && tau <= 0.0)
    return Eigen::MatrixXd::Zero(n, n);
  if (tau == 0.0) return Eigen::MatrixXd::Zero(n, n);
  const FactorForm f = factor_form(id);
  const Eigen::MatrixXd e = model::structured_exp(sys_, f.sign * tau);
  return f.M1 * (e - Eigen::MatrixXd::Identity(n, n)) * f.M2;
}

Eigen::MatrixXd Decomposition::sum(const Eigen::VectorXd& timing) const {
  const model::AugmentedState st = model::AugmentedState::of(sys_);
  if (timing.size() != st.m + st.p)
    throw std::invalid_argument("decomposition sum: timing must have length m+p");
  Eigen::MatrixXd a = nominal_;
  for (const ChannelId& id : channels_) {
    switch (id.kind) {
      case Kind::kActuator:
        a += deviation(id, timing[id.i]);
        break;
      case Kind::kSensor:
        a += deviation(id, timing[st.m + id.j]);
        break;
      case Kind::kActuatorSensor:
        a += deviation(id, timing[st.m + id.j] - timing[id.i]);
        break;
    }
  }
  return a;
}

double Decomposition::delta_max(const ChannelId& id) const {
  switch (id.kind) {
    case Kind::kActuator:
      return std::max(std::abs(sys_.dt_u_lo[id.i]), std::abs(sys_.dt_u_hi[id.i]));
    case Kind::kSensor:
      return std::max(std::abs(sys_.dt_y_lo[id.j]), std::abs(sys_.dt_y_hi[id.j]));
    case Kind::kActuatorSensor:
      return std::max(0.0, sys_.dt_y_hi[id.j] - sys_.dt_u_lo[id.i]);
  }
  throw std::logic_error("unreachable");
}

namespace {

// Rank-one pieces of the event deltas:
//   E_u_i - I = e_{act+i} [0  C_d(i,:)  0  -e_i']
//   E_y_j - I = e_{meas+j} [C_p(j,:)  0  -e_j'  0]
//   E_ctrl (E_y_j - I) = [0; B_d(:,j); e_j; 0] [C_p(j,:)  0  -e_j'  0]
// All entries are copies of system data, hence exact.
RankOne actuator_delta_rank1(const model::ClosedLoopSystem& sys, int i) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  Eigen::MatrixXd col = Eigen::MatrixXd::Zero(st.n(), 1);
  col(st.act() + i, 0) = 1.0;
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, st.n());
  row.block(0, st.ctrl(), 1, st.n_d) = sys.C_d.row(i);
  row(0, st.act() + i) = -1.0;
  return {iv::IntervalMatrix::from_point(col),
          iv::IntervalMatrix::from_point(row)};
}

Eigen::MatrixXd sensor_delta_row(const model::ClosedLoopSystem& sys, int j) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, st.n());
  row.block(0, st.plant(), 1, st.n_p) = sys.C_p.row(j);
  row(0, st.meas() + j) = -1.0;
  return row;
}

Eigen::MatrixXd ctrl_times_sensor_col(const model::ClosedLoopSystem& sys, int j) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  Eigen::MatrixXd col = Eigen::MatrixXd::Zero(st.n(), 1);
  col.block(st.ctrl(), 0, st.n_d, 1) = sys.B_d.col(j);
  col(st.meas() + j, 0) = 1.0;
  return col;
}

VerifiedFactors build_factors(const model::ClosedLoopSystem& sys,
                              const ChannelId& id,
                              const iv::IntervalMatrix& e_half,
                              const Eigen::MatrixXd& a_cont,
                              const iv::IntervalMatrix* m1_actuator = nullptr) {
  const Eigen::Index n = sys.n();
  const iv::IntervalMatrix e_ctrl =
      iv::IntervalMatrix::from_point(model::event_matrix_ctrl(sys));

  switch (id.kind) {
    case Kind::kActuator: {
      VerifiedFactors f;
      f.M1 = m1_actuator ? *m1_actuator : iv::mul(e_ctrl, e_half);
      f.m2_rank1 = actuator_delta_rank1(sys, id.i);
      f.M2 = iv::mul(f.m2_rank1->col, f.m2_rank1->row);
      f.A_signed = -a_cont;
      return f;
    }
    case Kind::kSensor: {
      VerifiedFactors f;
      RankOne r1;
      r1.col = iv::IntervalMatrix::from_point(ctrl_times_sensor_col(sys, id.j));
      r1.row = iv::mul(
          iv::IntervalMatrix::from_point(sensor_delta_row(sys, id.j)), e_half);
      f.M1 = iv::mul(r1.col, r1.row);
      f.m1_rank1 = std::move(r1);
      f.M2 = iv::IntervalMatrix::identity(n);
      f.A_signed = a_cont;
      return f;
    }
    case Kind::kActuatorSensor: {
      VerifiedFactors f;
      RankOne r1;
      r1.col = iv::IntervalMatrix::from_point(ctrl_times_sensor_col(sys, id.j));
      r1.row = iv::IntervalMatrix::from_point(sensor_delta_row(sys, id.j));
      f.M1 = iv::mul(r1.col, r1.row);
      f.m1_rank1 = std::move(r1);
      f.m2_rank1 = actuator_delta_rank1(sys, id.i);
      f.M2 = iv::mul(f.m2_rank1->col, f.m2_rank1->row);
      f.A_signed = a_cont;
      return f;
    }
  }
  throw std::logic_error("unreachable");
}

iv::IntervalMatrix nominal_from(const model::ClosedLoopSystem& sys,
                                const iv::IntervalMatrix& e_half) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  const Eigen::Index n = st.n();
  const iv::IntervalMatrix e_ctrl =
      iv::IntervalMatrix::from_point(model::event_matrix_ctrl(sys));

  Eigen::MatrixXd mid = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < st.m; ++i) mid += model::event_matrix_u(sys, i) - eye;
  for (int j = 0; j < st.p; ++j) mid += model::event_matrix_y(sys, j) - eye;

  // mid is assembled from disjoint rows of the event matrices, so it is
  // exact; only the exponential factors carry interval width.
  return iv::mul(iv::mul(iv::mul(e_ctrl, e_half),
                         iv::IntervalMatrix::from_point(mid)),
                 e_half);
}

Eigen::MatrixXd continuous_matrix(const model::ClosedLoopSystem& sys) {
  const model::AugmentedState st = model::AugmentedState::of(sys);
  Eigen::MatrixXd a_cont = Eigen::MatrixXd::Zero(st.n(), st.n());
  a_cont.block(st.plant(), st.plant(), st.n_p, st.n_p) = sys.A_p;
  a_cont.block(st.plant(), st.act(), st.n_p, st.m) = sys.B_p;
  return a_cont;
}

}  // namespace

iv::IntervalMatrix nominal_enclosure(const model::ClosedLoopSystem& sys) {
  return nominal_from(sys, iv::structured_exp_enclosure(sys, sys.T / 2));
}

VerifiedFactors verified_factors(const model::ClosedLoopSystem& sys,
                                 const ChannelId& id) {
  return build_factors(sys, id, iv::structured_exp_enclosure(sys, sys.T / 2),
                       continuous_matrix(sys));
}

VerifiedDecomposition::VerifiedDecomposition(const model::ClosedLoopSystem& sys) {
  sys.validate();
  const model::AugmentedState st = model::AugmentedState::of(sys);
  const iv::IntervalMatrix e_half = iv::structured_exp_enclosure(sys, sys.T / 2);
  a_cont_ = continuous_matrix(sys);
  nominal_ = nominal_from(sys, e_half);

  for (int i = 0; i < st.m; ++i) channels_.push_back({Kind::kActuator, i, 0});
  for (int j = 0; j < st.p; ++j) channels_.push_back({Kind::kSensor, 0, j});
  for (int i = 0; i < st.m; ++i)
    for (int j = 0; j < st.p; ++j)
      channels_.push_back({Kind::kActuatorSensor, i, j});
  // E_ctrl e^{A T/2} is the M1 of every actuator channel; build it once.
  const iv::IntervalMatrix m1_actuator =
      iv::mul(iv::IntervalMatrix::from_point(model::event_matrix_ctrl(sys)),
              e_half);
  factors_.reserve(channels_.size());
  for (const ChannelId& id : channels_)
    factors_.push_back(build_factors(sys, id, e_half, a_cont_, &m1_actuator));
}

}  // namespace jitcert::decomp
