#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <vector>

namespace jitcert::model {

/// The problem instance: continuous-time plant, discrete-time controller
/// with fixed period T, and per-channel bounds on the sensing/actuation
/// timing deviations.
struct ClosedLoopSystem {
  Eigen::MatrixXd A_p;  // n_p x n_p
  Eigen::MatrixXd B_p;  // n_p x m
  Eigen::MatrixXd C_p;  // p x n_p
  Eigen::MatrixXd A_d;  // n_d x n_d
  Eigen::MatrixXd B_d;  // n_d x p
  Eigen::MatrixXd C_d;  // m x n_d
  double T = 1.0;
  Eigen::VectorXd dt_u_lo, dt_u_hi;  // length m
  Eigen::VectorXd dt_y_lo, dt_y_hi;  // length p

  Eigen::Index np() const { return A_p.rows(); }
  Eigen::Index nd() const { return A_d.rows(); }
  Eigen::Index num_outputs() const { return C_p.rows(); }
  Eigen::Index num_inputs() const { return B_p.cols(); }
  Eigen::Index n() const { return np() + nd() + num_outputs() + num_inputs(); }

  // Throws std::invalid_argument on inconsistent dimensions or timing
  // bounds outside (-T/2, T/2).
  void validate() const;
};

/// Block layout of the augmented state x = [x_p' x_d' y_d' u']'.
struct AugmentedState {
  Eigen::Index n_p = 0, n_d = 0, p = 0, m = 0;

  static AugmentedState of(const ClosedLoopSystem& sys) {
    return {sys.np(), sys.nd(), sys.num_outputs(), sys.num_inputs()};
  }

  Eigen::Index plant() const { return 0; }
  Eigen::Index ctrl() const { return n_p; }
  Eigen::Index meas() const { return n_p + n_d; }
  Eigen::Index act() const { return n_p + n_d + p; }
  Eigen::Index n() const { return n_p + n_d + p + m; }
};

enum class EventKind { kActuator, kSensor, kController };

struct Event {
  EventKind kind;
  int index;              // channel index (0-based); 0 for the controller
  double nominal_offset;  // offset within the period (0 for u/y, T/2 for ctrl)
  Eigen::MatrixXd E;
};

/// Impulsive-system form of the closed loop: continuous matrix A_cont plus
/// the m + p + 1 event matrices of one control period (u events first, then
/// y events, controller update last).
struct LisSpec {
  ClosedLoopSystem sys;
  Eigen::MatrixXd A_cont;
  std::vector<Event> events;

  const Event& actuator_event(int i) const { return events[static_cast<size_t>(i)]; }
  const Event& sensor_event(int j) const {
    return events[static_cast<size_t>(sys.num_inputs() + j)];
  }
  const Event& controller_event() const { return events.back(); }
};

Eigen::MatrixXd event_matrix_u(const ClosedLoopSystem& sys, int i);
Eigen::MatrixXd event_matrix_y(const ClosedLoopSystem& sys, int j);
Eigen::MatrixXd event_matrix_ctrl(const ClosedLoopSystem& sys);

LisSpec build_lis(const ClosedLoopSystem& sys);

/// Closed-form e^{A_cont delta}: plant block e^{A_p delta}, plant-to-input
/// block B~(delta) = int_0^delta e^{A_p s} ds B_p, identity elsewhere.
/// Valid for delta of either sign. Both exponential blocks come from one
/// matrix exponential of the (n_p + m) augmented matrix [[A_p, B_p],[0,0]],
/// which also covers singular A_p.
Eigen::MatrixXd structured_exp(const ClosedLoopSystem& sys, double delta);

}  // namespace jitcert::model
