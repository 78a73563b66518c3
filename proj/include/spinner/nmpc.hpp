#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "spinner/attitude.hpp"
#include "spinner/dynamics.hpp"
#include "spinner/reference.hpp"
#include "spinner/types.hpp"
#include "spinner/vehicle.hpp"

// Receding-horizon controller. The nonlinear program (tracking cost over N
// stages, one RK4 step per stage, box bounds on rotor thrusts) is condensed
// into the 3N input variables and attacked with Gauss-Newton SQP in
// real-time-iteration style: shift the previous solution, take a small fixed
// number of full steps, return the best iterate.

namespace spinner {

struct NmpcWeights {
  Vec3 pos{100.0, 100.0, 800.0};
  Vec4 att{60.0, 60.0, 60.0, 0.0};  // tilt x, tilt y, tilt z (vacuous), yaw
  Vec3 vel{1.0, 1.0, 1.0};
  Vec3 rate{1.0, 1.0, 0.0};  // yaw rate free: the craft spins
  Vec3 input{1.0, 1.0, 1.0};

  CostVec stacked() const {
    CostVec w;
    w << pos, att, vel, rate, input;
    return w;
  }
};

struct NmpcConfig {
  int horizon_steps = 20;
  double step = 0.05;  // s
  NmpcWeights weights;
  NmpcWeights terminal_weights;  // input block applies to u_ref, so it is inert
  double input_lower = 0.0;      // N, per rotor
  double input_upper = 8.0;      // N, per rotor
  int max_sqp_iters = 3;
  double kkt_tol = 1e-4;
  double fd_step = 1e-6;  // central-difference sensitivity step

  void validate() const {
    auto bad = [](const char* what) { throw std::invalid_argument(std::string("NmpcConfig: ") + what); };
    if (horizon_steps < 1) bad("horizon_steps must be >= 1");
    if (!(step > 0.0) || step > 0.05) bad("step must be in (0, 0.05]");
    CostVec w = weights.stacked(), wn = terminal_weights.stacked();
    if (w.minCoeff() < 0.0 || wn.minCoeff() < 0.0) bad("weights must be non-negative");
    if (!(input_upper > input_lower)) bad("input_upper must exceed input_lower");
    if (max_sqp_iters < 1) bad("max_sqp_iters must be >= 1");
    if (!(kkt_tol > 0.0)) bad("kkt_tol must be positive");
    if (!(fd_step > 0.0)) bad("fd_step must be positive");
  }
};

// Tracking residual stack: [p - p_ref; tilt error (4); v - v_ref;
// w - w_ref; u - u_ref].
inline CostVec cost_vector(const State& s, const ReferencePoint& ref, const Vec3& thrusts) {
  CostVec y;
  y.segment<3>(0) = s.position - ref.position;
  y.segment<4>(3) = reduced_error_vector(ref.attitude, s.attitude).value;
  y.segment<3>(7) = s.velocity - ref.velocity;
  y.segment<3>(10) = s.body_rate - ref.body_rate;
  y.segment<3>(13) = thrusts - ref.rotor_thrusts;
  return y;
}

struct Prediction {
  std::vector<State> states;  // N+1, [0] is the initial state
  double total_cost = 0.0;
};

// Roll the prediction model over the horizon and accumulate the cost. The
// terminal stage is evaluated at u = u_ref so only state errors survive.
inline Prediction predict(const VehicleParams& params, const NmpcConfig& cfg, const State& x0,
                          std::span<const Vec3> inputs, std::span<const ReferencePoint> refs) {
  const size_t n = static_cast<size_t>(cfg.horizon_steps);
  if (inputs.size() != n) throw std::invalid_argument("predict: need N inputs");
  if (refs.size() != n + 1) throw std::invalid_argument("predict: need N+1 reference points");

  const CostVec w = cfg.weights.stacked();
  const CostVec wn = cfg.terminal_weights.stacked();
  Prediction out;
  out.states.reserve(n + 1);
  out.states.push_back(x0);
  for (size_t i = 0; i < n; ++i) {
    const CostVec y = cost_vector(out.states[i], refs[i], inputs[i]);
    out.total_cost += y.dot(w.cwiseProduct(y));
    out.states.push_back(integrate_rk4(params, out.states[i], RotorCommand{inputs[i]},
                                       Vec3::Zero(), cfg.step));
  }
  const CostVec yn = cost_vector(out.states[n], refs[n], refs[n].rotor_thrusts);
  out.total_cost += yn.dot(wn.cwiseProduct(yn));
  return out;
}

// Dense box-constrained QP: min 0.5 d'Hd + g'd, lo <= d <= hi, by a primal
// active-set method. H must be positive definite; sizes are tiny (3N).
inline Eigen::VectorXd solve_box_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                                    const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                    int max_iter = 400) {
  const int n = static_cast<int>(g.size());
  Eigen::VectorXd x(n);
  std::vector<int> where(n);  // -1 at lower, 0 free, +1 at upper
  for (int j = 0; j < n; ++j) {
    if (!(lo(j) <= hi(j))) throw std::invalid_argument("solve_box_qp: lo > hi");
    x(j) = std::clamp(0.0, lo(j), hi(j));
    where[j] = x(j) <= lo(j) ? -1 : (x(j) >= hi(j) ? 1 : 0);
  }

  const double drop_tol = 1e-10 * (1.0 + g.cwiseAbs().maxCoeff());
  for (int it = 0; it < max_iter; ++it) {
    std::vector<int> free;
    free.reserve(n);
    for (int j = 0; j < n; ++j)
      if (where[j] == 0) free.push_back(j);

    const Eigen::VectorXd grad = H * x + g;
    Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
    if (!free.empty()) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd hff(m, m);
      Eigen::VectorXd gf(m);
      for (int a = 0; a < m; ++a) {
        gf(a) = grad(free[a]);
        for (int b = 0; b < m; ++b) hff(a, b) = H(free[a], free[b]);
      }
      const Eigen::VectorXd df = hff.ldlt().solve(-gf);
      for (int a = 0; a < m; ++a) d(free[a]) = df(a);
    }

    if (d.lpNorm<Eigen::Infinity>() < 1e-12) {
      // Multiplier check: can releasing a bound still reduce the objective?
      int worst = -1;
      double worst_val = -drop_tol;
      for (int j = 0; j < n; ++j) {
        if (where[j] == -1 && grad(j) < worst_val) {
          worst_val = grad(j);
          worst = j;
        } else if (where[j] == 1 && -grad(j) < worst_val) {
          worst_val = -grad(j);
          worst = j;
        }
      }
      if (worst < 0) return x;  // KKT point
      where[worst] = 0;
      continue;
    }

    double alpha = 1.0;
    int block = -1, side = 0;
    for (int j : free) {
      if (d(j) > 0.0 && hi(j) < std::numeric_limits<double>::infinity()) {
        const double lim = (hi(j) - x(j)) / d(j);
        if (lim < alpha) { alpha = lim; block = j; side = 1; }
      } else if (d(j) < 0.0 && lo(j) > -std::numeric_limits<double>::infinity()) {
        const double lim = (lo(j) - x(j)) / d(j);
        if (lim < alpha) { alpha = lim; block = j; side = -1; }
      }
    }
    x += alpha * d;
    if (block >= 0 && alpha < 1.0) {
      x(block) = side > 0 ? hi(block) : lo(block);
      where[block] = side;
    }
  }
  return x;  // iteration guard; x is feasible by construction
}

struct NmpcSolution {
  enum class Status { converged, max_iters, infeasible_clamped };

  std::vector<Vec3> inputs;           // N stages
  std::vector<State> predicted_states;  // N+1 states, [0] = measured
  double cost = 0.0;
  double kkt_residual = 0.0;  // projected-gradient norm at last linearization
  int iterations = 0;
  Status status = Status::converged;
  double stage_dt = 0.05;
};

class NmpcSolver {
 public:
  struct CondensedQp {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd gradient;
    Eigen::VectorXd lower, upper;  // step bounds around the linearization point
  };

  NmpcSolver(const VehicleParams& plant_params, const NmpcConfig& cfg)
      : model_(plant_params), cfg_(cfg) {
    cfg_.validate();
    model_.validate();
    // Prediction model mismatch (intentional): no roll/pitch damping; the
    // plate yaw drag stays because the spin couples into the gyroscopics.
    model_.rot_damping_xy = 0.0;
    hover_ = hover_equilibrium(model_).command.thrusts;
    const int nu = 3 * cfg_.horizon_steps;
    e_.setZero(13, nu);
    jac_.setZero(16, nu);
    h_.setZero(nu, nu);
    g_.setZero(nu);
  }

  const VehicleParams& model_params() const { return model_; }
  const NmpcConfig& config() const { return cfg_; }

  // Condensed Gauss-Newton QP at the given input sequence (public so tests
  // can compare the gradient against finite differences of predict).
  CondensedQp build_qp(const State& x0, std::span<const ReferencePoint> refs,
                       const std::vector<Vec3>& inputs) {
    const Prediction pred = predict(model_, cfg_, x0, inputs, refs);
    CondensedQp qp;
    if (!build_qp_internal(pred, refs, inputs, &qp.hessian, &qp.gradient))
      throw std::runtime_error("build_qp: non-finite linearization");
    const int nu = 3 * cfg_.horizon_steps;
    qp.lower.resize(nu);
    qp.upper.resize(nu);
    for (int i = 0; i < cfg_.horizon_steps; ++i)
      for (int a = 0; a < 3; ++a) {
        qp.lower(3 * i + a) = cfg_.input_lower - inputs[i](a);
        qp.upper(3 * i + a) = cfg_.input_upper - inputs[i](a);
      }
    return qp;
  }

  NmpcSolution solve(const State& measured, std::span<const ReferencePoint> refs,
                     const NmpcSolution* warm_override = nullptr) {
    const size_t n = static_cast<size_t>(cfg_.horizon_steps);
    if (refs.size() != n + 1) throw std::invalid_argument("solve: need N+1 reference points");

    std::vector<Vec3> u = shifted_warm_start(warm_override);
    NmpcSolution sol;
    sol.stage_dt = cfg_.step;

    // Track the best rollout seen so the returned solution never costs more
    // than the shifted warm start (descent guarantee of the iteration).
    std::vector<Vec3> best_u = u;
    Prediction best_pred;
    bool have_best = false;
    double kkt = std::numeric_limits<double>::infinity();
    int iters = 0;
    bool converged = false, bad_numerics = false;

    for (int it = 0; it <= cfg_.max_sqp_iters; ++it) {
      Prediction pred = predict(model_, cfg_, measured, u, refs);
      if (!std::isfinite(pred.total_cost) || !pred.states.back().finite()) {
        bad_numerics = true;
        break;
      }
      if (!have_best || pred.total_cost < best_pred.total_cost) {
        best_pred = pred;
        best_u = u;
        have_best = true;
      }
      if (it == cfg_.max_sqp_iters) break;  // final rollout only

      if (!build_qp_internal(pred, refs, u, &h_, &g_)) {
        bad_numerics = true;
        break;
      }
      kkt = projected_gradient_norm(u);
      if (kkt < cfg_.kkt_tol) {
        converged = true;
        break;
      }

      const int nu = 3 * cfg_.horizon_steps;
      Eigen::VectorXd lo(nu), hi(nu);
      for (size_t i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a) {
          lo(3 * i + a) = cfg_.input_lower - u[i](a);
          hi(3 * i + a) = cfg_.input_upper - u[i](a);
        }
      const Eigen::VectorXd d = solve_box_qp(h_, g_, lo, hi);
      if (!d.allFinite()) {
        bad_numerics = true;
        break;
      }
      for (size_t i = 0; i < n; ++i)
        for (int a = 0; a < 3; ++a)
          u[i](a) = std::clamp(u[i](a) + d(3 * i + a), cfg_.input_lower, cfg_.input_upper);
      ++iters;
    }

    if (!have_best) {
      // Even the warm-start rollout blew up: return it clamped, flagged.
      sol.inputs = u;
      sol.predicted_states.assign(n + 1, measured);
      sol.cost = std::numeric_limits<double>::infinity();
      sol.kkt_residual = std::numeric_limits<double>::infinity();
      sol.iterations = iters;
      sol.status = NmpcSolution::Status::infeasible_clamped;
      last_ = sol;
      return sol;
    }

    sol.inputs = best_u;
    sol.predicted_states = best_pred.states;
    sol.cost = best_pred.total_cost;
    sol.kkt_residual = kkt;
    sol.iterations = iters;
    sol.status = bad_numerics   ? NmpcSolution::Status::infeasible_clamped
                 : converged    ? NmpcSolution::Status::converged
                                : NmpcSolution::Status::max_iters;
    last_ = sol;
    return sol;
  }

  void reset() { last_.inputs.clear(); }

 private:
  std::vector<Vec3> shifted_warm_start(const NmpcSolution* warm_override) const {
    const size_t n = static_cast<size_t>(cfg_.horizon_steps);
    const std::vector<Vec3>* prev = nullptr;
    if (warm_override && warm_override->inputs.size() == n) prev = &warm_override->inputs;
    else if (last_.inputs.size() == n) prev = &last_.inputs;

    std::vector<Vec3> u(n, hover_);
    if (prev) {
      for (size_t i = 0; i + 1 < n; ++i) u[i] = (*prev)[i + 1];
      u[n - 1] = (*prev)[n - 1];
    }
    for (auto& ui : u)
      for (int a = 0; a < 3; ++a) ui(a) = std::clamp(ui(a), cfg_.input_lower, cfg_.input_upper);
    return u;
  }

  StateVec step_model(const StateVec& x, const Vec3& u) const {
    return integrate_rk4(model_, State::from_vector(x), RotorCommand{u}, Vec3::Zero(), cfg_.step)
        .to_vector();
  }

  // Gauss-Newton condensing. Returns false on non-finite numbers.
  bool build_qp_internal(const Prediction& pred, std::span<const ReferencePoint> refs,
                         const std::vector<Vec3>& inputs, Eigen::MatrixXd* h_out,
                         Eigen::VectorXd* g_out) {
    const int n = cfg_.horizon_steps;
    const int nu = 3 * n;
    const double fd = cfg_.fd_step;
    const CostVec w = cfg_.weights.stacked();
    const CostVec wn = cfg_.terminal_weights.stacked();

    h_out->setZero(nu, nu);
    g_out->setZero(nu);
    e_.setZero(13, nu);

    Eigen::Matrix<double, 13, 13> a_i;
    Eigen::Matrix<double, 13, 3> b_i;
    Eigen::Matrix<double, 16, 13> c_i;

    for (int i = 0; i < n; ++i) {
      const StateVec xi = pred.states[i].to_vector();
      const Vec3 ui = inputs[i];
      const CostVec yi = cost_vector(pred.states[i], refs[i], ui);

      // Stage residual Jacobian wrt all inputs: C_i E_i plus the direct
      // input block (identity into rows 13..15).
      for (int j = 0; j < 13; ++j) {
        StateVec xp = xi, xm = xi;
        xp(j) += fd;
        xm(j) -= fd;
        c_i.col(j) = (cost_vector(State::from_vector(xp), refs[i], ui) -
                      cost_vector(State::from_vector(xm), refs[i], ui)) /
                     (2.0 * fd);
      }
      jac_.noalias() = c_i * e_;
      jac_.block<3, 3>(13, 3 * i) += Mat3::Identity();

      const CostVec wy = w.cwiseProduct(yi);
      g_out->noalias() += 2.0 * jac_.transpose() * wy;
      h_out->noalias() += 2.0 * jac_.transpose() * w.asDiagonal() * jac_;

      // Dynamics sensitivities advance the state-vs-input map E.
      for (int j = 0; j < 13; ++j) {
        StateVec xp = xi, xm = xi;
        xp(j) += fd;
        xm(j) -= fd;
        a_i.col(j) = (step_model(xp, ui) - step_model(xm, ui)) / (2.0 * fd);
      }
      for (int j = 0; j < 3; ++j) {
        Vec3 up = ui, um = ui;
        up(j) += fd;
        um(j) -= fd;
        b_i.col(j) = (step_model(xi, up) - step_model(xi, um)) / (2.0 * fd);
      }
      e_ = a_i * e_;
      e_.block<13, 3>(0, 3 * i) += b_i;
    }

    // Terminal stage: residual at u_ref has no direct input dependence.
    const StateVec xn = pred.states[n].to_vector();
    const Vec3 un = refs[n].rotor_thrusts;
    const CostVec yn = cost_vector(pred.states[n], refs[n], un);
    for (int j = 0; j < 13; ++j) {
      StateVec xp = xn, xm = xn;
      xp(j) += fd;
      xm(j) -= fd;
      c_i.col(j) = (cost_vector(State::from_vector(xp), refs[n], un) -
                    cost_vector(State::from_vector(xm), refs[n], un)) /
                   (2.0 * fd);
    }
    jac_.noalias() = c_i * e_;
    const CostVec wyn = wn.cwiseProduct(yn);
    g_out->noalias() += 2.0 * jac_.transpose() * wyn;
    h_out->noalias() += 2.0 * jac_.transpose() * wn.asDiagonal() * jac_;

    // Tiny Tikhonov term keeps the active-set solves well-posed.
    const double reg = 1e-9 * (1.0 + h_out->trace() / nu);
    h_out->diagonal().array() += reg;

    return h_out->allFinite() && g_out->allFinite();
  }

  // Stationarity: distance between U and the box projection of U - grad.
  double projected_gradient_norm(const std::vector<Vec3>& u) const {
    double worst = 0.0;
    for (size_t i = 0; i < u.size(); ++i)
      for (int a = 0; a < 3; ++a) {
        const double v = u[i](a);
        const double proj = std::clamp(v - g_(3 * i + a), cfg_.input_lower, cfg_.input_upper);
        worst = std::max(worst, std::abs(v - proj));
      }
    return worst;
  }

  VehicleParams model_;
  NmpcConfig cfg_;
  Vec3 hover_ = Vec3::Zero();
  NmpcSolution last_;

  Eigen::MatrixXd e_, jac_, h_;
  Eigen::VectorXd g_;
};

}  // namespace spinner
