#include "jitcert/lis_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace jitcert::sim {

namespace {

void check_sorted(const EventSchedule& sched) {
  double prev = sched.start_time;
  for (const ScheduledEvent& ev : sched.events) {
    if (ev.time < prev)
      throw std::invalid_argument("event schedule is not sorted by time");
    prev = ev.time;
  }
}

}  // namespace

Eigen::VectorXd simulate(const model::LisSpec& spec, const EventSchedule& sched,
                         double t) {
  check_sorted(sched);
  if (t < sched.start_time)
    throw std::invalid_argument("simulate: t precedes the schedule start");

  Eigen::VectorXd x = sched.x0;
  double tau = sched.start_time;
  for (const ScheduledEvent& ev : sched.events) {
    if (ev.time > t) break;
    x = model::structured_exp(spec.sys, ev.time - tau) * x;
    x = spec.events[static_cast<size_t>(ev.event_index)].E * x;
    tau = ev.time;
  }
  return model::structured_exp(spec.sys, t - tau) * x;
}

Eigen::MatrixXd transition_matrix(const model::LisSpec& spec,
                                  const Eigen::VectorXd& timing) {
  const model::AugmentedState st = model::AugmentedState::of(spec.sys);
  const Eigen::Index ne = st.m + st.p;
  if (timing.size() != ne)
    throw std::invalid_argument("transition_matrix: timing must have length m+p");
  const double half = spec.sys.T / 2;
  for (Eigen::Index i = 0; i < ne; ++i)
    if (!(timing[i] > -half && timing[i] < half))
      throw std::invalid_argument(
          "transition_matrix: timing deviation outside (-T/2, T/2)");

  // Events of one period at offsets dt_i around kT = 0; ties broken by event
  // index (the order of simultaneous events does not affect the result).
  std::vector<Eigen::Index> order(static_cast<size_t>(ne));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return timing[a] < timing[b];
                   });

  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(st.n(), st.n());
  double tau = -half;
  for (Eigen::Index idx : order) {
    a = spec.events[static_cast<size_t>(idx)].E *
        (model::structured_exp(spec.sys, timing[idx] - tau) * a);
    tau = timing[idx];
  }
  a = spec.controller_event().E * (model::structured_exp(spec.sys, half - tau) * a);
  return a;
}

EventSchedule periodic_schedule(const model::LisSpec& spec,
                                const Eigen::VectorXd& x0,
                                const std::vector<Eigen::VectorXd>& timings) {
  const model::AugmentedState st = model::AugmentedState::of(spec.sys);
  const double T = spec.sys.T;
  EventSchedule sched{T / 2, x0, {}};

  for (size_t k = 0; k < timings.size(); ++k) {
    const Eigen::VectorXd& dt = timings[k];
    if (dt.size() != st.m + st.p)
      throw std::invalid_argument("periodic_schedule: timing must have length m+p");
    const double kT = static_cast<double>(k + 1) * T;

    std::vector<ScheduledEvent> period;
    for (Eigen::Index i = 0; i < st.m + st.p; ++i)
      period.push_back({kT + dt[i], static_cast<int>(i)});
    std::stable_sort(period.begin(), period.end(),
                     [](const ScheduledEvent& a, const ScheduledEvent& b) {
                       return a.time < b.time;
                     });
    period.push_back({kT + T / 2, static_cast<int>(st.m + st.p)});
    sched.events.insert(sched.events.end(), period.begin(), period.end());
  }
  return sched;
}

void write_trajectory_csv(std::ostream& out, const model::LisSpec& spec,
                          const EventSchedule& sched, double t_end, double step) {
  out << "time";
  for (Eigen::Index i = 0; i < spec.sys.n(); ++i) out << ",x" << i + 1;
  out << "\n";
  for (double t = sched.start_time; t <= t_end; t += step) {
    const Eigen::VectorXd x = simulate(spec, sched, t);
    out << t;
    for (Eigen::Index i = 0; i < x.size(); ++i) out << "," << x[i];
    out << "\n";
  }
}

}  // namespace jitcert::sim
