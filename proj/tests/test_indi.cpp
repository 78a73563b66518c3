#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "spinner/indi.hpp"

using namespace spinner;

namespace {

constexpr double kDt = 0.005;  // 200 Hz inner loop

NmpcSolution make_plan(const Vec3& u, const State& stage_state, int n = 20) {
  NmpcSolution plan;
  plan.inputs.assign(n, u);
  plan.predicted_states.assign(n + 1, stage_state);
  plan.stage_dt = 0.05;
  return plan;
}

}  // namespace

TEST_CASE("filter passes a constant through from the first sample", "[indi]") {
  LowPassFilter2 f(12.0, kDt);
  const Vec3 c{0.3, -1.2, 4.0};
  REQUIRE((f.step(c) - c).norm() == 0.0);
  for (int i = 0; i < 50; ++i) REQUIRE((f.step(c) - c).norm() < 1e-14);
}

TEST_CASE("filter settles to a shifted constant inside the cutoff window", "[indi]") {
  LowPassFilter2 f(12.0, kDt);
  for (int i = 0; i < 100; ++i) f.step(Vec3{0.9, 0.9, 0.9});
  const int window = static_cast<int>(std::ceil(5.0 / (2.0 * kPi * 12.0) / kDt));
  Vec3 y = Vec3::Zero();
  for (int i = 0; i < window; ++i) y = f.step(Vec3{1.0, 1.0, 1.0});
  REQUIRE((y - Vec3{1.0, 1.0, 1.0}).lpNorm<Eigen::Infinity>() < 0.01);
}

TEST_CASE("filter step response never overshoots", "[indi]") {
  LowPassFilter2 f(12.0, kDt);
  f.step(Vec3::Zero());
  double prev = 0.0;
  for (int i = 0; i < 300; ++i) {
    const double y = f.step(Vec3{1.0, 1.0, 1.0})(0);
    REQUIRE(y >= prev - 1e-15);
    REQUIRE(y <= 1.0 + 1e-12);
    prev = y;
  }
  REQUIRE(prev > 1.0 - 1e-6);
}

TEST_CASE("filter is 6 dB down at the cutoff frequency", "[indi]") {
  const double fc = 12.0;
  LowPassFilter2 f(fc, kDt);
  // Analytic cascade magnitude at fc for the ZOH one-pole pair.
  const double a = f.alpha(), th = 2.0 * kPi * fc * kDt;
  const double gain = (1.0 - a) * (1.0 - a) / (1.0 - 2.0 * a * std::cos(th) + a * a);
  REQUIRE(gain > 0.45);
  REQUIRE(gain < 0.55);

  double peak = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double x = std::sin(2.0 * kPi * fc * k * kDt);
    const double y = f.step(Vec3{x, x, x})(0);
    if (k >= 1600) peak = std::max(peak, std::abs(y));
  }
  REQUIRE(peak > 0.45);
  REQUIRE(peak < 0.55);
  REQUIRE(peak == Catch::Approx(gain).margin(0.02));
}

TEST_CASE("rate and torque channels share one impulse response", "[indi]") {
  IndiState st(IndiConfig{}, kDt);
  REQUIRE(st.rate_filter.alpha() == st.torque_filter.alpha());
  REQUIRE(st.rate_filter.alpha() == st.rate_deriv_filter.alpha());

  const double a = st.rate_filter.alpha();
  st.rate_filter.step(Vec3::Zero());
  st.torque_filter.step(Vec3::Zero());
  st.rate_filter.step(Vec3{1, 1, 1});
  st.torque_filter.step(Vec3{1, 1, 1});
  for (int k = 1; k < 60; ++k) {
    const double expected = (1.0 - a) * (1.0 - a) * k * std::pow(a, k - 1);
    REQUIRE(st.rate_filter.value()(0) == Catch::Approx(expected).margin(1e-15));
    REQUIRE(std::abs(st.rate_filter.value()(0) - st.torque_filter.value()(0)) < 1e-12);
    st.rate_filter.step(Vec3::Zero());
    st.torque_filter.step(Vec3::Zero());
  }
}

TEST_CASE("disturbance estimate isolates each dynamics term", "[indi]") {
  VehicleParams p;
  const IndiConfig cfg;

  {  // inertia * filtered rate derivative
    IndiState st(cfg, kDt);
    st.rate_filter.step(Vec3::Zero());
    st.rate_deriv_filter.step(Vec3{1, 0, 0});
    st.torque_filter.step(Vec3::Zero());
    REQUIRE((estimate_disturbance(p, st) - Vec3{5.59e-3, 0, 0}).norm() < 1e-15);
  }
  {  // gyroscopic coupling plus rotational damping
    IndiState st(cfg, kDt);
    st.rate_filter.step(Vec3{1, 1, 0});
    st.rate_deriv_filter.step(Vec3::Zero());
    st.torque_filter.step(Vec3::Zero());
    const Vec3 expect{1e-3, 1e-3, 5.77e-3 - 5.59e-3};
    REQUIRE((estimate_disturbance(p, st) - expect).norm() < 1e-15);
  }
  {  // applied torque enters negated
    IndiState st(cfg, kDt);
    st.rate_filter.step(Vec3::Zero());
    st.rate_deriv_filter.step(Vec3::Zero());
    st.torque_filter.step(Vec3{0.1, 0, 0});
    REQUIRE((estimate_disturbance(p, st) + Vec3{0.1, 0, 0}).norm() < 1e-15);
  }
  {  // matched model at the plate equilibrium: nothing unexplained
    IndiState st(cfg, kDt);
    const Vec3 spin{0, 0, equilibrium_spin_rate(p)};
    st.rate_filter.step(spin);
    st.rate_deriv_filter.step(Vec3::Zero());
    st.torque_filter.step(rotational_drag_torque(p, spin));
    REQUIRE(estimate_disturbance(p, st).norm() < 1e-12);
  }
}

TEST_CASE("incremental torque law", "[indi]") {
  VehicleParams p;
  IndiState st(IndiConfig{}, kDt);
  st.rate_filter.step(Vec3::Zero());
  st.rate_deriv_filter.step(Vec3{0.7, -0.3, 0.2});
  st.torque_filter.step(Vec3{0.01, -0.02, 0.03});
  const Vec3 tau_f = st.filt_torque();

  // No wanted change in acceleration: command what is already acting.
  REQUIRE((incremental_torque(p, st, st.filt_rate_deriv()) - tau_f).norm() < 1e-15);

  // A unit x acceleration increment costs exactly J_xx.
  const Vec3 up = incremental_torque(p, st, st.filt_rate_deriv() + Vec3{1, 0, 0});
  REQUIRE((up - tau_f - Vec3{5.59e-3, 0, 0}).norm() < 1e-15);

  // Linear in the request for fixed filter state.
  const Vec3 a{1.0, 2.0, -1.0}, b{-0.4, 0.1, 0.8};
  const Vec3 lhs = incremental_torque(p, st, a + b) - incremental_torque(p, st, a);
  REQUIRE((lhs - p.inertia_diag.cwiseProduct(b)).norm() < 1e-15);
}

TEST_CASE("pseudoinverse left-inverts the allocation matrix", "[indi]") {
  VehicleParams p;
  const Eigen::Matrix<double, 3, 4> pinv = allocation_pseudoinverse(p);
  const Mat3 ident = pinv * allocation_matrix(p);
  REQUIRE((ident - Mat3::Identity()).norm() < 1e-9);
}

TEST_CASE("allocation recovers any in-range command from its wrench", "[indi]") {
  VehicleParams p;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uu(0.5, 7.5);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 u{uu(rng), uu(rng), uu(rng)};
    const Eigen::Vector4d w = allocation_matrix(p) * u;
    const AllocationResult out = allocate(p, w(0), w.tail<3>());
    REQUIRE_FALSE(out.saturated);
    REQUIRE((out.command.thrusts - u).norm() < 1e-9);
    REQUIRE(std::abs(out.command.thrusts.sum() - w(0)) < 1e-6);
  }
}

TEST_CASE("allocating the hover wrench reproduces the hover solve", "[indi]") {
  VehicleParams p;
  const HoverSolution hover = hover_equilibrium(p);
  const AllocationResult out =
      allocate(p, p.mass * p.gravity, Vec3{0, 0, hover.residual_yaw_torque});
  REQUIRE((out.command.thrusts - hover.command.thrusts).norm() < 1e-9);
}

TEST_CASE("unreachable wrench lands at the least-squares optimum", "[indi]") {
  VehicleParams p;
  // Zero yaw torque at hover thrust cannot be produced by three rotors.
  Eigen::Vector4d target;
  target << p.mass * p.gravity, 0, 0, 0;
  const Vec3 u = allocate(p, target(0), target.tail<3>()).command.thrusts;
  const AllocMatrix m = allocation_matrix(p);
  const double best = (m * u - target).norm();
  REQUIRE(best > 1e-4);  // genuinely unreachable

  std::mt19937_64 rng(32);
  std::normal_distribution<double> n01(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Vec3 d{n01(rng), n01(rng), n01(rng)};
    d *= 1e-3 / d.norm();
    REQUIRE((m * (u + d) - target).norm() >= best - 1e-12);
  }
  for (int axis = 0; axis < 3; ++axis)
    for (double sign : {-1.0, 1.0}) {
      Vec3 d = Vec3::Zero();
      d(axis) = sign * 1e-3;
      REQUIRE((m * (u + d) - target).norm() >= best - 1e-12);
    }
}

TEST_CASE("first two ticks pass the plan through unmodified", "[indi]") {
  VehicleParams p;
  IndiConfig cfg;
  IndiState st(cfg, kDt);
  State s;
  s.body_rate = {0.4, -0.2, 3.0};
  const Vec3 u0{3.1, 4.2, 2.7};
  const NmpcSolution plan = make_plan(u0, s);
  const RotorCommand last{Vec3{3.7, 3.7, 3.7}};
  REQUIRE((indi_tick(p, cfg, st, s.body_rate, last, plan, kDt).thrusts - u0).norm() == 0.0);
  REQUIRE((indi_tick(p, cfg, st, s.body_rate, last, plan, kDt).thrusts - u0).norm() == 0.0);
  REQUIRE(st.ticks == 2);
  REQUIRE(st.rate_filter.warmed());
}

TEST_CASE("tick rejects malformed plans", "[indi]") {
  VehicleParams p;
  IndiConfig cfg;
  IndiState st(cfg, kDt);
  NmpcSolution plan;
  plan.stage_dt = 0.05;
  REQUIRE_THROWS_AS(
      indi_tick(p, cfg, st, Vec3::Zero(), RotorCommand{}, plan, kDt),
      std::invalid_argument);
}

TEST_CASE("closed loop converges to the plan at the spin equilibrium", "[indi]") {
  VehicleParams p;
  IndiConfig cfg;
  IndiState st(cfg, kDt);
  const double r_eq = equilibrium_spin_rate(p);
  const Vec3 hover_u = hover_equilibrium(p).command.thrusts;

  State truth;
  truth.position = {0, 0, 1};
  truth.body_rate = {0, 0, r_eq};
  State stage = truth;
  const NmpcSolution plan = make_plan(hover_u, stage);

  // Deliberately wrong starting command; the rate loop must walk it back.
  RotorCommand cmd{hover_u + Vec3{0.3, -0.2, 0.1}};
  for (int k = 0; k < 600; ++k) {
    const RotorCommand next = indi_tick(p, cfg, st, truth.body_rate, cmd, plan, kDt);
    truth = integrate_rk4(p, truth, next, Vec3::Zero(), kDt);
    cmd = next;
  }
  REQUIRE((cmd.thrusts - hover_u).norm() < 1e-3);
  REQUIRE(std::abs(cmd.thrusts.sum() - hover_u.sum()) < 1e-6);
  REQUIRE(std::abs(truth.body_rate(2) - r_eq) < 0.1);
  REQUIRE(truth.body_rate.head<2>().norm() < 1e-3);
}

TEST_CASE("constant roll disturbance is estimated and countered", "[indi]") {
  VehicleParams p;
  IndiConfig cfg;
  IndiState st(cfg, kDt);
  const double r_eq = equilibrium_spin_rate(p);
  const Vec3 hover_u = hover_equilibrium(p).command.thrusts;
  const Vec3 delta{0.02, 0.0, 0.0};

  State truth;
  truth.position = {0, 0, 1};
  truth.body_rate = {0, 0, r_eq};
  const NmpcSolution plan = make_plan(hover_u, truth);

  RotorCommand cmd{hover_u};
  Vec3 est_sum = Vec3::Zero(), tau_sum = Vec3::Zero();
  int count = 0;
  for (int k = 0; k < 1200; ++k) {
    const RotorCommand next = indi_tick(p, cfg, st, truth.body_rate, cmd, plan, kDt);
    truth = integrate_rk4(p, truth, next, Vec3::Zero(), kDt, delta);
    cmd = next;
    if (k >= 1000) {
      est_sum += estimate_disturbance(p, st);
      tau_sum += (allocation_matrix(p) * cmd.thrusts).tail<3>();
      ++count;
    }
  }
  const Vec3 est = est_sum / count;
  const Vec3 tau = tau_sum / count;
  // The estimator pins the injected torque.
  REQUIRE(std::abs(est(0) - delta(0)) < 0.02 * delta(0));
  REQUIRE(std::abs(est(1)) < 1e-3);
  // The delivered roll torque offsets it.
  REQUIRE(std::abs(tau(0) + delta(0)) < 0.05 * delta(0));
  // And the rates stay pinned to the plan.
  REQUIRE(truth.body_rate.head<2>().norm() < 5e-3);
}
