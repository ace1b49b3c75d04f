#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

#include "jitcert/model.hpp"

namespace jitcert::sim {

struct ScheduledEvent {
  double time;
  int event_index;  // index into LisSpec::events
};

/// Absolute-time event schedule: tau_0 <= tau_1 <= ... (equal times allowed).
struct EventSchedule {
  double start_time = 0.0;
  Eigen::VectorXd x0;
  std::vector<ScheduledEvent> events;
};

/// Trajectory of the impulsive system at time t >= start_time, with
/// right-continuous semantics: events at tau <= t are already applied.
/// Throws std::invalid_argument for an unsorted schedule.
Eigen::VectorXd simulate(const model::LisSpec& spec, const EventSchedule& sched,
                         double t);

/// One-period transition matrix A(dt) for a timing vector
/// [dt_u_1 .. dt_u_m, dt_y_1 .. dt_y_p]; each component must lie in
/// (-T/2, T/2). Events with equal times are ordered by event index (any
/// order yields the same matrix).
Eigen::MatrixXd transition_matrix(const model::LisSpec& spec,
                                  const Eigen::VectorXd& timing);

/// Schedule for periods k = 1..timings.size() with start at t0 = T/2,
/// matching the convention that discretized samples are taken at kT + T/2
/// just after the controller update.
EventSchedule periodic_schedule(const model::LisSpec& spec,
                                const Eigen::VectorXd& x0,
                                const std::vector<Eigen::VectorXd>& timings);

/// Debug trajectory dump: "time,x_1,...,x_n" rows, states ordered
/// [x_p, x_d, y_d, u], sampled every `step` from start_time to t_end.
void write_trajectory_csv(std::ostream& out, const model::LisSpec& spec,
                          const EventSchedule& sched, double t_end, double step);

}  // namespace jitcert::sim
