#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinner/indi.hpp"
#include "spinner/nmpc.hpp"
#include "spinner/reference.hpp"

namespace spinner {

inline constexpr double kControlDt = 0.005;  // 200 Hz controller
inline constexpr double kPlantDt = 0.001;    // 1 kHz plant
inline constexpr int kPlantSubsteps = 5;     // exactly 5 plant steps per tick

// Piecewise-constant wind with an optional seeded Gaussian band on top.
struct WindStep {
  double t_start = 0.0;
  Vec3 velocity = Vec3::Zero();
};

struct WindProfile {
  std::vector<WindStep> steps;  // ascending t_start; empty means calm air
  double noise_std = 0.0;       // per-axis, drawn once per control tick

  Vec3 at(double t) const {
    Vec3 v = Vec3::Zero();
    for (const WindStep& s : steps) {
      if (t + 1e-12 < s.t_start) break;
      v = s.velocity;
    }
    return v;
  }

  void validate() const {
    for (size_t i = 1; i < steps.size(); ++i)
      if (steps[i].t_start < steps[i - 1].t_start)
        throw std::invalid_argument("wind profile steps must be time-ordered");
    if (noise_std < 0.0) throw std::invalid_argument("wind noise_std must be >= 0");
  }
};

inline WindProfile gust_step_profile(double speed, double t_on, const Vec3& direction) {
  if (speed < 0.0) throw std::domain_error("gust speed must be >= 0");
  const double n = direction.norm();
  if (!(n > 0.0)) throw std::invalid_argument("gust direction must be nonzero");
  WindProfile w;
  w.steps.push_back({t_on, Vec3(speed * direction / n)});
  return w;
}

struct SensorNoise {
  double position_std = 0.0;  // m, on measured position
  double rate_std = 0.0;      // rad/s, on measured body rate

  void validate() const {
    if (position_std < 0.0 || rate_std < 0.0)
      throw std::invalid_argument("sensor noise std-devs must be >= 0");
  }
};

struct Scenario {
  std::string name = "scenario";
  double duration = 10.0;
  State initial_state;
  std::shared_ptr<Reference> reference;
  WindProfile wind;
  int plate_width_mm = 30;
  SensorNoise sensor_noise;
  std::uint64_t seed = 0;
  Vec3 external_torque = Vec3::Zero();  // constant body torque on the plant
  bool use_indi = true;
  VehicleParams vehicle;
  NmpcConfig nmpc;
  IndiConfig indi;

  void validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("scenario duration must be > 0");
    if (!reference) throw std::invalid_argument("scenario needs a reference");
    if (plate_width_mm != 20 && plate_width_mm != 30 && plate_width_mm != 40)
      throw std::invalid_argument("plate width must be 20, 30, or 40 mm");
    if (!initial_state.finite()) throw std::invalid_argument("initial state must be finite");
    wind.validate();
    sensor_noise.validate();
    nmpc.validate();
    indi.validate();
  }
};

struct LogSample {
  double t = 0.0;
  State state;
  Vec3 ref_position = Vec3::Zero();
  Vec3 ref_velocity = Vec3::Zero();
  Vec3 command = Vec3::Zero();  // rotor thrusts, N
  double nmpc_cost = 0.0;
  double nmpc_kkt = 0.0;
  int nmpc_iters = 0;
  Vec3 tau_hat = Vec3::Zero();  // INDI disturbance estimate, N*m
  Vec3 wind = Vec3::Zero();
};

struct RunLog {
  std::vector<LogSample> samples;  // 200 Hz grid, first at t = 0
  bool aborted = false;
  std::string abort_reason;
  std::vector<double> solve_ms;  // NMPC wall time per tick; not serialized
};

// Closed-loop rollout: sense (optionally noisy), solve NMPC, refine through
// INDI, hold the command over exactly 5 plant substeps. Deterministic for a
// fixed scenario and seed. A non-finite state stops the run and keeps the
// log gathered so far.
inline RunLog run(const Scenario& sc) {
  sc.validate();
  VehicleParams plant = sc.vehicle;
  plant.plate_yaw_drag_coeff = plate_coeff_for_width(plant, sc.plate_width_mm);
  plant.validate();

  NmpcSolver solver(plant, sc.nmpc);
  IndiState indi(sc.indi, kControlDt);
  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const int n = sc.nmpc.horizon_steps;
  const int ticks = static_cast<int>(std::llround(sc.duration / kControlDt));
  std::vector<ReferencePoint> refs(n + 1);

  RunLog log;
  log.samples.reserve(ticks + 1);
  log.solve_ms.reserve(ticks);
  State truth = sc.initial_state;
  RotorCommand applied{hover_equilibrium(plant).command.thrusts};
  NmpcSolution sol;

  auto record = [&](double t, const Vec3& wind_now) {
    LogSample s;
    s.t = t;
    s.state = truth;
    const ReferencePoint r = sc.reference->sample(t);
    s.ref_position = r.position;
    s.ref_velocity = r.velocity;
    s.command = applied.thrusts;
    s.nmpc_cost = sol.cost;
    s.nmpc_kkt = sol.kkt_residual;
    s.nmpc_iters = sol.iterations;
    s.tau_hat = sc.use_indi ? estimate_disturbance(plant, indi) : Vec3(Vec3::Zero());
    s.wind = wind_now;
    log.samples.push_back(s);
  };

  for (int k = 0; k < ticks; ++k) {
    const double t = k * kControlDt;
    if (!truth.finite()) {
      log.aborted = true;
      log.abort_reason = "non-finite state at t=" + std::to_string(t) + " s";
      return log;
    }

    Vec3 wind_now = sc.wind.at(t);
    if (sc.wind.noise_std > 0.0)
      wind_now += sc.wind.noise_std * Vec3{gauss(rng), gauss(rng), gauss(rng)};

    State measured = truth;
    if (sc.sensor_noise.position_std > 0.0)
      measured.position += sc.sensor_noise.position_std * Vec3{gauss(rng), gauss(rng), gauss(rng)};
    if (sc.sensor_noise.rate_std > 0.0)
      measured.body_rate += sc.sensor_noise.rate_std * Vec3{gauss(rng), gauss(rng), gauss(rng)};

    for (int i = 0; i <= n; ++i) refs[i] = sc.reference->sample(t + i * sc.nmpc.step);

    const auto t0 = std::chrono::steady_clock::now();
    sol = solver.solve(measured, refs);
    const auto t1 = std::chrono::steady_clock::now();
    log.solve_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());

    RotorCommand cmd = sc.use_indi
                           ? indi_tick(plant, sc.indi, indi, measured.body_rate, applied, sol,
                                       kControlDt)
                           : RotorCommand{sol.inputs[0]};
    if (!cmd.thrusts.allFinite()) {
      log.aborted = true;
      log.abort_reason = "non-finite command at t=" + std::to_string(t) + " s";
      return log;
    }
    applied = cmd;
    record(t, wind_now);

    for (int i = 0; i < kPlantSubsteps; ++i)
      truth = integrate_rk4(plant, truth, applied, wind_now, kPlantDt, sc.external_torque);
  }

  if (!truth.finite()) {
    log.aborted = true;
    log.abort_reason = "non-finite state at t=" + std::to_string(ticks * kControlDt) + " s";
    return log;
  }
  record(ticks * kControlDt, sc.wind.at(ticks * kControlDt));
  return log;
}

namespace detail {
inline std::vector<const LogSample*> window(const RunLog& log, double t1, double t2) {
  if (!(t1 < t2)) throw std::invalid_argument("metric window needs t1 < t2");
  if (log.samples.empty()) throw std::invalid_argument("metric window on empty log");
  if (t1 < log.samples.front().t - 1e-9 || t2 > log.samples.back().t + 1e-9)
    throw std::invalid_argument("metric window outside the log span");
  std::vector<const LogSample*> out;
  for (const LogSample& s : log.samples)
    if (s.t >= t1 - 1e-9 && s.t <= t2 + 1e-9) out.push_back(&s);
  if (out.size() < 2) throw std::invalid_argument("metric window holds fewer than 2 samples");
  return out;
}
}  // namespace detail

// Root-mean-square position error over [t1, t2], squared norm integrated
// with the trapezoid rule on the log grid.
inline double mean_tracking_error(const RunLog& log, double t1, double t2) {
  const auto w = detail::window(log, t1, t2);
  double acc = 0.0;
  for (size_t i = 1; i < w.size(); ++i) {
    const double e0 = (w[i - 1]->state.position - w[i - 1]->ref_position).squaredNorm();
    const double e1 = (w[i]->state.position - w[i]->ref_position).squaredNorm();
    acc += 0.5 * (e0 + e1) * (w[i]->t - w[i - 1]->t);
  }
  return std::sqrt(acc / (w.back()->t - w.front()->t));
}

inline double max_tracking_error(const RunLog& log, double t1, double t2) {
  const auto w = detail::window(log, t1, t2);
  double worst = 0.0;
  for (const LogSample* s : w)
    worst = std::max(worst, (s->state.position - s->ref_position).norm());
  return worst;
}

inline constexpr const char* kLogCsvHeader =
    "t_s,px_m,py_m,pz_m,qw,qx,qy,qz,vx_mps,vy_mps,vz_mps,wx_radps,wy_radps,wz_radps,"
    "ref_px_m,ref_py_m,ref_pz_m,ref_vx_mps,ref_vy_mps,ref_vz_mps,u0_N,u1_N,u2_N,"
    "nmpc_cost,nmpc_kkt,nmpc_iters,tau_hat_x_Nm,tau_hat_y_Nm,tau_hat_z_Nm,"
    "wind_x_mps,wind_y_mps,wind_z_mps";

namespace detail {
inline void append_g17(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}
}  // namespace detail

inline std::string log_to_csv(const RunLog& log) {
  std::string out(kLogCsvHeader);
  out += '\n';
  for (const LogSample& s : log.samples) {
    double fields[32];
    int f = 0;
    fields[f++] = s.t;
    for (int i = 0; i < 3; ++i) fields[f++] = s.state.position(i);
    fields[f++] = s.state.attitude.w;
    fields[f++] = s.state.attitude.x;
    fields[f++] = s.state.attitude.y;
    fields[f++] = s.state.attitude.z;
    for (int i = 0; i < 3; ++i) fields[f++] = s.state.velocity(i);
    for (int i = 0; i < 3; ++i) fields[f++] = s.state.body_rate(i);
    for (int i = 0; i < 3; ++i) fields[f++] = s.ref_position(i);
    for (int i = 0; i < 3; ++i) fields[f++] = s.ref_velocity(i);
    for (int i = 0; i < 3; ++i) fields[f++] = s.command(i);
    fields[f++] = s.nmpc_cost;
    fields[f++] = s.nmpc_kkt;
    fields[f++] = 0.0;  // placeholder slot; iters written as an integer below
    for (int i = 0; i < 3; ++i) fields[f++] = s.tau_hat(i);
    for (int i = 0; i < 3; ++i) fields[f++] = s.wind(i);

    for (int i = 0; i < 32; ++i) {
      if (i) out += ',';
      if (i == 25) {
        out += std::to_string(s.nmpc_iters);
      } else {
        detail::append_g17(out, fields[i]);
      }
    }
    out += '\n';
  }
  if (log.aborted) {
    out += "# aborted: ";
    out += log.abort_reason;
    out += '\n';
  }
  return out;
}

inline void write_log_csv(const std::string& path, const RunLog& log) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open log file for writing: " + path);
  const std::string text = log_to_csv(log);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw std::runtime_error("failed writing log file: " + path);
}

inline RunLog read_log_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open log file: " + path);
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty log file: " + path);
  if (line != kLogCsvHeader) throw std::runtime_error("unexpected log header in " + path);

  RunLog log;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line.rfind("# aborted: ", 0) == 0) {
      log.aborted = true;
      log.abort_reason = line.substr(11);
      continue;
    }
    std::array<double, 32> v{};
    const char* p = line.c_str();
    for (int i = 0; i < 32; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(p, &end);
      if (end == p) throw std::runtime_error("malformed log row in " + path);
      p = end;
      if (i < 31) {
        if (*p != ',') throw std::runtime_error("malformed log row in " + path);
        ++p;
      }
    }
    if (*p != '\0') throw std::runtime_error("trailing fields in log row in " + path);

    LogSample s;
    int f2 = 0;
    s.t = v[f2++];
    for (int i = 0; i < 3; ++i) s.state.position(i) = v[f2++];
    s.state.attitude.w = v[f2++];
    s.state.attitude.x = v[f2++];
    s.state.attitude.y = v[f2++];
    s.state.attitude.z = v[f2++];
    for (int i = 0; i < 3; ++i) s.state.velocity(i) = v[f2++];
    for (int i = 0; i < 3; ++i) s.state.body_rate(i) = v[f2++];
    for (int i = 0; i < 3; ++i) s.ref_position(i) = v[f2++];
    for (int i = 0; i < 3; ++i) s.ref_velocity(i) = v[f2++];
    for (int i = 0; i < 3; ++i) s.command(i) = v[f2++];
    s.nmpc_cost = v[f2++];
    s.nmpc_kkt = v[f2++];
    s.nmpc_iters = static_cast<int>(std::llround(v[f2++]));
    for (int i = 0; i < 3; ++i) s.tau_hat(i) = v[f2++];
    for (int i = 0; i < 3; ++i) s.wind(i) = v[f2++];
    log.samples.push_back(s);
  }
  return log;
}

// Mean spin rate over the last quarter of the log.
inline double steady_spin_rate(const RunLog& log) {
  if (log.samples.empty()) throw std::invalid_argument("steady_spin_rate on empty log");
  const size_t start = log.samples.size() - std::max<size_t>(1, log.samples.size() / 4);
  double acc = 0.0;
  for (size_t i = start; i < log.samples.size(); ++i) acc += log.samples[i].state.body_rate(2);
  return acc / static_cast<double>(log.samples.size() - start);
}

struct MetricsRow {
  std::string scenario;
  std::uint64_t seed = 0;
  double mean_error_m = 0.0;
  double max_error_m = 0.0;
  double steady_spin_radps = 0.0;
  double solve_mean_ms = 0.0;
  double solve_max_ms = 0.0;
};

inline MetricsRow summarize_run(const Scenario& sc, const RunLog& log, double t1, double t2) {
  MetricsRow row;
  row.scenario = sc.name;
  row.seed = sc.seed;
  row.mean_error_m = mean_tracking_error(log, t1, t2);
  row.max_error_m = max_tracking_error(log, t1, t2);
  row.steady_spin_radps = steady_spin_rate(log);
  if (!log.solve_ms.empty()) {
    double acc = 0.0, worst = 0.0;
    for (double ms : log.solve_ms) {
      acc += ms;
      worst = std::max(worst, ms);
    }
    row.solve_mean_ms = acc / static_cast<double>(log.solve_ms.size());
    row.solve_max_ms = worst;
  }
  return row;
}

inline constexpr const char* kMetricsCsvHeader =
    "scenario,seed,e_t_m,e_pe_m,steady_spin_radps,solve_mean_ms,solve_max_ms";

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open metrics file for writing: " + path);
  std::string out(kMetricsCsvHeader);
  out += '\n';
  for (const MetricsRow& r : rows) {
    out += r.scenario;
    out += ',';
    out += std::to_string(r.seed);
    for (double v : {r.mean_error_m, r.max_error_m, r.steady_spin_radps, r.solve_mean_ms,
                     r.solve_max_ms}) {
      out += ',';
      detail::append_g17(out, v);
    }
    out += '\n';
  }
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("failed writing metrics file: " + path);
}

inline std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics file: " + path);
  std::string line;
  if (!std::getline(f, line) || line != kMetricsCsvHeader)
    throw std::runtime_error("unexpected metrics header in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRow r;
    if (!std::getline(ss, r.scenario, ',')) throw std::runtime_error("bad metrics row in " + path);
    if (!std::getline(ss, field, ',')) throw std::runtime_error("bad metrics row in " + path);
    r.seed = std::stoull(field);
    double* slots[5] = {&r.mean_error_m, &r.max_error_m, &r.steady_spin_radps, &r.solve_mean_ms,
                        &r.solve_max_ms};
    for (double* slot : slots) {
      if (!std::getline(ss, field, ',')) throw std::runtime_error("bad metrics row in " + path);
      *slot = std::stod(field);
    }
    rows.push_back(r);
  }
  return rows;
}

// Fixed-width text table over metric rows, with a trailing mean row.
inline std::string report_table(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("report_table needs at least one row");
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-16s %6s %9s %9s %11s %10s %10s\n", "scenario", "seed",
                "e_t_m", "e_pe_m", "spin_radps", "mean_ms", "max_ms");
  out += buf;
  MetricsRow mean;
  for (const MetricsRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %6" PRIu64 " %9.4f %9.4f %11.3f %10.3f %10.3f\n",
                  r.scenario.c_str(), static_cast<std::uint64_t>(r.seed), r.mean_error_m,
                  r.max_error_m, r.steady_spin_radps, r.solve_mean_ms, r.solve_max_ms);
    out += buf;
    mean.mean_error_m += r.mean_error_m;
    mean.max_error_m += r.max_error_m;
    mean.steady_spin_radps += r.steady_spin_radps;
    mean.solve_mean_ms += r.solve_mean_ms;
    mean.solve_max_ms += r.solve_max_ms;
  }
  const double n = static_cast<double>(rows.size());
  std::snprintf(buf, sizeof(buf), "%-16s %6s %9.4f %9.4f %11.3f %10.3f %10.3f\n", "mean", "-",
                mean.mean_error_m / n, mean.max_error_m / n, mean.steady_spin_radps / n,
                mean.solve_mean_ms / n, mean.solve_max_ms / n);
  out += buf;
  return out;
}

inline std::string report_table_from_files(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("report needs at least one metrics file");
  std::vector<MetricsRow> rows;
  for (const std::string& p : paths) {
    const std::vector<MetricsRow> part = read_metrics_csv(p);  // throws naming the file
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return report_table(rows);
}

}  // namespace spinner
