#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "jitcert/lis_sim.hpp"
#include "jitcert/pnorm.hpp"
#include "jitcert/synth.hpp"
#include "jitcert/verify.hpp"
#include "support.hpp"

using namespace jitcert;

namespace {
std::mt19937 rng(140914);

model::ClosedLoopSystem scalar_integrator(double jitter) {
  // Plant xdot = u, one sensor, one-period-delayed proportional feedback.
  model::ClosedLoopSystem sys;
  sys.A_p = Eigen::MatrixXd::Zero(1, 1);
  sys.B_p = Eigen::MatrixXd::Ones(1, 1);
  sys.C_p = Eigen::MatrixXd::Ones(1, 1);
  sys.A_d = Eigen::MatrixXd::Zero(1, 1);
  sys.B_d = Eigen::MatrixXd::Ones(1, 1);
  sys.C_d = Eigen::MatrixXd::Constant(1, 1, -0.8);
  sys.T = 1.0;
  sys.dt_u_lo = Eigen::VectorXd::Constant(1, -jitter);
  sys.dt_u_hi = Eigen::VectorXd::Constant(1, jitter);
  sys.dt_y_lo = Eigen::VectorXd::Constant(1, -jitter);
  sys.dt_y_hi = Eigen::VectorXd::Constant(1, jitter);
  return sys;
}

Eigen::MatrixXd synthesized_factor(const model::ClosedLoopSystem& sys) {
  const decomp::Decomposition dec(sys);
  const auto res = synth::beta_search(sys, dec);
  REQUIRE(res.synthesis.status == synth::Status::kOk);
  return res.synthesis.K;
}
}  // namespace

TEST_CASE("zero timing bounds: stable with rho_tilde == rho_n") {
  model::ClosedLoopSystem sys = scalar_integrator(0.0);
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::Certificate cert = verify::certify(sys, k);
  CHECK(cert.verdict == verify::Verdict::kStable);
  CHECK(cert.rho_tilde.hi == cert.rho_n.hi);
  for (const auto& b : cert.bounds) {
    CHECK(b.bound.lo == 0.0);
    CHECK(b.bound.hi == 0.0);
  }
}

TEST_CASE("scalar plant with small jitter certifies and decays in simulation") {
  model::ClosedLoopSystem sys = scalar_integrator(1e-3);  // T/1000
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::Certificate cert = verify::certify(sys, k);
  REQUIRE(cert.verdict == verify::Verdict::kStable);
  const double rho = cert.rho_tilde.hi;

  // Monte-Carlo check of the certified contraction against the simulator.
  const model::LisSpec lis = model::build_lis(sys);
  const Eigen::MatrixXd p = k * k.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
  const double cond_sqrt =
      std::sqrt(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff());
  const int periods = 30;
  for (int run = 0; run < 200; ++run) {
    std::vector<Eigen::VectorXd> timings;
    for (int j = 0; j < periods; ++j)
      timings.push_back(testing::random_timing(rng, sys));
    Eigen::VectorXd x0 = testing::random_matrix(rng, sys.n(), 1);
    const sim::EventSchedule sched = sim::periodic_schedule(lis, x0, timings);
    for (int j = 1; j <= periods; ++j) {
      const Eigen::VectorXd xk =
          sim::simulate(lis, sched, (static_cast<double>(j) + 0.5) * sys.T);
      CHECK(xk.norm() <=
            cond_sqrt * std::pow(rho, j) * x0.norm() * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("unstable nominal yields verdict unknown") {
  model::ClosedLoopSystem sys = scalar_integrator(0.0);
  sys.C_d = Eigen::MatrixXd::Constant(1, 1, -3.0);  // rho{A(0)} > 1
  const decomp::Decomposition dec(sys);
  REQUIRE(synth::spectral_radius(dec.nominal()) > 1.0);
  const verify::Certificate cert =
      verify::certify(sys, Eigen::MatrixXd::Identity(sys.n(), sys.n()));
  CHECK(cert.verdict == verify::Verdict::kUnknown);
  CHECK(cert.reason == "rho_tilde >= 1");
  CHECK(cert.rho_n.lo > 1.0);  // spectral radius lower-bounds every P-norm
}

TEST_CASE("unverifiable P yields verdict unknown with a reason") {
  const model::ClosedLoopSystem sys = scalar_integrator(1e-3);
  Eigen::MatrixXd k = Eigen::MatrixXd::Identity(sys.n(), sys.n());
  k(2, 2) = -1.0;
  const verify::Certificate cert = verify::certify(sys, k);
  CHECK(cert.verdict == verify::Verdict::kUnknown);
  CHECK(cert.reason == "P not verifiably positive definite");
}

TEST_CASE("cges constants: definition cases") {
  model::ClosedLoopSystem sys = scalar_integrator(0.0);
  sys.T = 1.0;
  const auto c = verify::cges_constants(sys, std::exp(-1.0));
  CHECK(c.lambda == doctest::Approx(-1.0).epsilon(1e-12));

  // A_cont = 0 and identity events: lambda_bar = 0, C_ev = C_bar = 1.
  model::ClosedLoopSystem idle;
  idle.A_p = Eigen::MatrixXd::Zero(1, 1);
  idle.B_p = Eigen::MatrixXd::Zero(1, 1);
  idle.C_p = Eigen::MatrixXd::Zero(1, 1);
  idle.A_d = Eigen::MatrixXd::Identity(1, 1);
  idle.B_d = Eigen::MatrixXd::Zero(1, 1);
  idle.C_d = Eigen::MatrixXd::Zero(1, 1);
  idle.T = 1.0;
  idle.dt_u_lo = idle.dt_y_lo = Eigen::VectorXd::Constant(1, 0.0);
  idle.dt_u_hi = idle.dt_y_hi = Eigen::VectorXd::Constant(1, 0.0);
  const auto c2 = verify::cges_constants(idle, 0.5);
  CHECK(c2.lambda_bar <= 1e-12);
  CHECK(c2.C_ev == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c2.C_bar == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(verify::cges_constants(sys, 1.0), std::invalid_argument);
}

TEST_CASE("C_ev matches the largest event-matrix singular value") {
  for (int k = 0; k < 30; ++k) {
    const model::ClosedLoopSystem sys = testing::random_system(rng, 3);
    const model::LisSpec lis = model::build_lis(sys);
    double sigma = 0.0;
    for (const model::Event& ev : lis.events)
      sigma = std::max(sigma, ev.E.jacobiSvd().singularValues()(0));
    const auto c = verify::cges_constants(sys, 0.5);
    CHECK(c.C_ev >= sigma * (1 - 1e-12));
    CHECK(c.C_ev <= sigma * (1 + 1e-9));
  }
}

TEST_CASE("continuous-time decay bound holds along simulated trajectories") {
  const model::ClosedLoopSystem sys = testing::double_integrator_benchmark();
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::Certificate cert = verify::certify(sys, k);
  REQUIRE(cert.verdict == verify::Verdict::kStable);
  REQUIRE(cert.cges.has_value());
  CHECK(cert.cges->lambda < 0.0);
  CHECK(cert.D >= 1.0);

  const model::LisSpec lis = model::build_lis(sys);
  std::uniform_real_distribution<double> ut(0.0, 20.0 * sys.T);
  const double t0 = sys.T / 2;
  for (int run = 0; run < 100; ++run) {
    std::vector<Eigen::VectorXd> timings;
    for (int j = 0; j < 22; ++j)
      timings.push_back(testing::random_timing(rng, sys));
    const Eigen::VectorXd x0 = testing::random_matrix(rng, sys.n(), 1);
    const sim::EventSchedule sched = sim::periodic_schedule(lis, x0, timings);
    for (int s = 0; s < 10; ++s) {
      const double t = t0 + ut(rng);
      const Eigen::VectorXd xt = sim::simulate(lis, sched, t);
      CHECK(xt.norm() <= cert.D * x0.norm() *
                             std::exp(cert.cges->lambda * (t - t0)) *
                             (1.0 + 1e-9));
    }
  }
}

TEST_CASE("sensitivity ranking: noisiest sensor first, zero UY last") {
  // Symmetric two-sensor system; sensor 2 gets 10x the jitter.
  model::ClosedLoopSystem sys = testing::double_integrator_benchmark();
  sys.C_p = Eigen::MatrixXd::Ones(2, 2);
  sys.C_p(1, 0) = 1.0;  // keep both sensors structurally identical
  sys.C_p(0, 0) = 1.0;
  sys.B_d = Eigen::MatrixXd::Identity(2, 2);
  const double w = sys.T / 2000.0;
  sys.dt_y_lo << -w, -10 * w;
  sys.dt_y_hi << w, 10 * w;
  // Actuator ahead of both sensors: hi_y - lo_u < 0 would zero the UY
  // bound; force that for sensor 1 only.
  sys.dt_u_lo << 11 * w;
  sys.dt_u_hi << 12 * w;
  sys.dt_y_lo[0] = -w;
  sys.dt_y_hi[0] = w;

  const decomp::Decomposition dec(sys);
  if (synth::spectral_radius(dec.nominal()) < 1.0) {
    const auto res = synth::beta_search(sys, dec);
    REQUIRE(res.synthesis.status == synth::Status::kOk);
    const verify::Certificate cert = verify::certify(sys, res.synthesis.K);

    // Sensor 2 (10x jitter) outranks sensor 1.
    int rank_y1 = -1, rank_y2 = -1;
    for (size_t r = 0; r < cert.sensitivity.size(); ++r) {
      const auto& ch = cert.sensitivity[r].channel;
      if (ch.kind == decomp::Kind::kSensor && ch.j == 0) rank_y1 = static_cast<int>(r);
      if (ch.kind == decomp::Kind::kSensor && ch.j == 1) rank_y2 = static_cast<int>(r);
    }
    CHECK(rank_y2 < rank_y1);

    // UY(1,1) has hi_y - lo_u = w - 11w < 0: bound exactly zero, ranked last
    // among nonzero bounds.
    for (const auto& b : cert.sensitivity) {
      if (b.channel.kind == decomp::Kind::kActuatorSensor && b.channel.j == 0) {
        CHECK(b.bound.hi == 0.0);
        CHECK(b.delta_max == 0.0);
      }
    }
    CHECK(cert.sensitivity.back().bound.hi == 0.0);
  }
}

TEST_CASE("approximate analysis is below the verified bound") {
  for (int k = 0; k < 5; ++k) {
    const model::ClosedLoopSystem sys =
        testing::double_integrator_benchmark(0.3 + 0.3 * k);
    const Eigen::MatrixXd kf = synthesized_factor(sys);
    const verify::Certificate cert = verify::certify(sys, kf);
    const verify::ApproxResult approx = verify::approx_certify(sys, kf, 100);
    CHECK(approx.rho_tilde <= cert.rho_tilde.hi * (1 + 1e-12));
    CHECK(approx.rho_n <= cert.rho_n.hi * (1 + 1e-12));
  }
}

TEST_CASE("verified and approximate rho_tilde agree closely on the benchmark") {
  const model::ClosedLoopSystem sys = testing::double_integrator_benchmark();
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::Certificate cert = verify::certify(sys, k);
  const verify::ApproxResult approx = verify::approx_certify(sys, k, 100);
  CHECK(cert.rho_tilde.hi - approx.rho_tilde >= 0.0);
  CHECK(cert.rho_tilde.hi - approx.rho_tilde < 1e-4);
}

TEST_CASE("no growth over 200 periods when the verdict is stable") {
  const model::ClosedLoopSystem sys = testing::double_integrator_benchmark();
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::Certificate cert = verify::certify(sys, k);
  REQUIRE(cert.verdict == verify::Verdict::kStable);
  const model::LisSpec lis = model::build_lis(sys);
  for (int run = 0; run < 20; ++run) {
    std::vector<Eigen::VectorXd> timings;
    for (int j = 0; j < 200; ++j)
      timings.push_back(testing::random_timing(rng, sys));
    const Eigen::VectorXd x0 = testing::random_matrix(rng, sys.n(), 1);
    const sim::EventSchedule sched = sim::periodic_schedule(lis, x0, timings);
    const Eigen::VectorXd x_end = sim::simulate(lis, sched, 200.5 * sys.T);
    CHECK(x_end.norm() < x0.norm());
  }
}

TEST_CASE("approximate analysis with zero bounds reduces to the nominal norm") {
  const model::ClosedLoopSystem sys = scalar_integrator(0.0);
  const Eigen::MatrixXd k = synthesized_factor(sys);
  const verify::ApproxResult approx = verify::approx_certify(sys, k, 50);
  const decomp::Decomposition dec(sys);
  CHECK(approx.rho_tilde ==
        doctest::Approx(pnorm::pnorm_float(k, dec.nominal())).epsilon(1e-12));
}

TEST_CASE("enlarging a timing window never decreases rho_tilde") {
  const model::ClosedLoopSystem base = testing::double_integrator_benchmark();
  const Eigen::MatrixXd k = synthesized_factor(base);
  double prev = 0.0;
  for (double scale : {0.25, 0.5, 1.0, 2.0}) {
    model::ClosedLoopSystem sys = testing::double_integrator_benchmark(scale);
    const verify::Certificate cert = verify::certify(sys, k);
    CHECK(cert.rho_tilde.hi >= prev);
    prev = cert.rho_tilde.hi;
  }
}

TEST_CASE("certified stability survives a jitter-scale bisection") {
  // A stable nominal loop must certify at some strictly positive scale.
  double lo = 0.0, hi = 1.0;
  const model::ClosedLoopSystem probe = testing::double_integrator_benchmark(1.0);
  const decomp::Decomposition dec(probe);
  REQUIRE(synth::spectral_radius(dec.nominal()) < 1.0);
  double certified = -1.0;
  for (int it = 0; it < 6; ++it) {
    const double scale = (it == 0) ? 1.0 : 0.5 * (lo + hi);
    const model::ClosedLoopSystem sys =
        testing::double_integrator_benchmark(scale);
    const auto res = synth::beta_search(sys, decomp::Decomposition(sys));
    bool ok = false;
    if (res.synthesis.status == synth::Status::kOk) {
      ok = verify::certify(sys, res.synthesis.K).verdict ==
           verify::Verdict::kStable;
    }
    if (ok) {
      certified = scale;
      break;
    }
    hi = scale;
  }
  CHECK(certified > 0.0);
}
