// Command-line front end for the spinner stack: runs the closed-loop
// scenarios, writes log and metrics CSVs, and prints a one-line summary per
// run. Exit codes: 0 success, 1 configuration error (the message names the
// offending key or file), 2 numerical abort (partial log is still written).

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinner/config.hpp"
#include "spinner/fov.hpp"
#include "spinner/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  double duration = 0.0;  // 0 keeps the scenario default
  int plate_width_mm = 30;
};

void add_common(CLI::App* sub, CommonOpts* o, bool with_plate = true) {
  sub->add_option("--config", o->config_path, "config file (key = value lines)");
  sub->add_option("--set", o->overrides, "override a config key, e.g. --set nmpc.kkt_tol=1e-5")
      ->type_name("KEY=VALUE");
  sub->add_option("--out", o->out_dir, "output directory for CSV files");
  sub->add_option("--seed", o->seed, "RNG seed for wind and sensor noise");
  sub->add_option("--duration", o->duration, "override run duration in seconds");
  if (with_plate)
    sub->add_option("--plate", o->plate_width_mm, "anti-torque plate width in mm (20, 30, 40)");
}

spinner::StackConfig stack_from(const CommonOpts& o) {
  spinner::ConfigMap cfg;
  if (!o.config_path.empty()) cfg = spinner::load_config_file(o.config_path);
  for (const auto& kv : o.overrides) spinner::apply_override(cfg, kv);
  return spinner::make_stack_config(cfg);
}

double max_speed(const spinner::RunLog& log) {
  double v = 0.0;
  for (const auto& s : log.samples) v = std::max(v, s.state.velocity.norm());
  return v;
}

// Runs one scenario, writes <out>/<name>_log.csv and <out>/<name>_metrics.csv,
// prints the summary line. On numerical abort the partial log is still
// written so the failure can be inspected.
int run_and_emit(spinner::Scenario sc, const CommonOpts& o) {
  sc.seed = o.seed;
  if (o.duration > 0.0) sc.duration = o.duration;
  const spinner::RunLog log = spinner::run(sc);

  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  const std::string base = (fs::path(o.out_dir) / sc.name).string();
  spinner::write_log_csv(base + "_log.csv", log);
  if (log.aborted) {
    std::fprintf(stderr, "error: %s run aborted: %s\n", sc.name.c_str(),
                 log.abort_reason.c_str());
    std::fprintf(stderr, "partial log written to %s_log.csv\n", base.c_str());
    return kExitNumerical;
  }

  const double t_end = log.samples.back().t;
  const spinner::MetricsRow row = spinner::summarize_run(sc, log, 0.0, t_end);
  spinner::write_metrics_csv(base + "_metrics.csv", {row});
  std::printf(
      "%s seed=%llu e_t=%.4f m e_pe=%.4f m spin=%.3f rad/s max_speed=%.3f m/s "
      "solve=%.3f/%.3f ms\n",
      sc.name.c_str(), static_cast<unsigned long long>(sc.seed), row.mean_error_m,
      row.max_error_m, row.steady_spin_radps, max_speed(log), row.solve_mean_ms,
      row.solve_max_ms);
  std::printf("wrote %s_log.csv and %s_metrics.csv\n", base.c_str(), base.c_str());
  return kExitOk;
}

// Spin-up runs from rest for each plate width; one combined metrics file.
int run_plate_sweep(const CommonOpts& o) {
  const spinner::StackConfig stack = stack_from(o);
  const double duration = o.duration > 0.0 ? o.duration : 10.0;

  namespace fs = std::filesystem;
  fs::create_directories(o.out_dir);
  std::vector<spinner::MetricsRow> rows;
  for (int width : {20, 30, 40}) {
    spinner::Scenario sc = spinner::hover_scenario(stack, width, o.seed, duration, true);
    sc.name = "plate" + std::to_string(width);
    const spinner::RunLog log = spinner::run(sc);
    const std::string base = (fs::path(o.out_dir) / sc.name).string();
    spinner::write_log_csv(base + "_log.csv", log);
    if (log.aborted) {
      std::fprintf(stderr, "error: %s run aborted: %s\n", sc.name.c_str(),
                   log.abort_reason.c_str());
      return kExitNumerical;
    }
    const double t_end = log.samples.back().t;
    rows.push_back(spinner::summarize_run(sc, log, 0.0, t_end));
    const spinner::VehicleParams p = spinner::vehicle_with_plate(sc.vehicle, width);
    std::printf("%s seed=%llu steady_spin=%.3f rad/s (equilibrium %.3f) e_t=%.4f m\n",
                sc.name.c_str(), static_cast<unsigned long long>(sc.seed),
                rows.back().steady_spin_radps, spinner::equilibrium_spin_rate(p),
                rows.back().mean_error_m);
  }
  const std::string metrics_path = (fs::path(o.out_dir) / "plate_sweep_metrics.csv").string();
  spinner::write_metrics_csv(metrics_path, rows);
  std::printf("wrote %s\n", metrics_path.c_str());
  return kExitOk;
}

int run_fov_report(const spinner::SensorMount& mount) {
  mount.validate();
  std::printf("sensor: native %g x %g deg (h x v), tilted %g deg off the spin plane\n",
              mount.native_horizontal_fov_deg, mount.native_vertical_fov_deg,
              mount.tilt_angle_deg);
  std::printf("swept vertical fov: %g deg\n", spinner::swept_vertical_fov(mount));
  std::printf("swept horizontal fov while spinning: %g deg\n",
              spinner::swept_horizontal_fov(mount, spinner::kPlateRate30mm));
  std::printf("blind-zone refresh per plate width:\n");
  const struct { int mm; double rate; } plates[] = {{20, spinner::kPlateRate20mm},
                                                    {30, spinner::kPlateRate30mm},
                                                    {40, spinner::kPlateRate40mm}};
  for (const auto& pl : plates)
    std::printf("  %d mm plate, %4.1f rad/s: %.3f s per revolution\n", pl.mm, pl.rate,
                spinner::blind_zone_refresh_s(pl.rate));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed-loop simulator for a self-spinning tri-rotor"};
  app.require_subcommand(1);

  CommonOpts o;

  CLI::App* hover = app.add_subcommand("hover", "hold a point at the equilibrium spin");
  add_common(hover, &o);
  bool at_rest = false;
  hover->add_flag("--at-rest", at_rest, "start with zero spin and let the plate spin the craft up");

  CLI::App* lemn = app.add_subcommand("lemniscate", "track a figure-eight for two loops");
  add_common(lemn, &o);
  bool clean = false;
  lemn->add_flag("--clean", clean, "disable the mild sensor noise");

  CLI::App* gust = app.add_subcommand("gust", "hover through a finite head-on gust");
  add_common(gust, &o);
  double gust_speed = 4.8, gust_on = 5.0, gust_off = 11.0;
  gust->add_option("--speed", gust_speed, "gust speed in m/s");
  gust->add_option("--gust-on", gust_on, "gust onset time in s");
  gust->add_option("--gust-off", gust_off, "gust end time in s");

  CLI::App* sweep = app.add_subcommand("plate-sweep", "spin-up from rest for each plate width");
  add_common(sweep, &o, /*with_plate=*/false);

  CLI::App* wpts = app.add_subcommand("waypoints", "fly a smooth path through a waypoint file");
  add_common(wpts, &o);
  std::string wp_file;
  double wp_speed = 0.5;
  wpts->add_option("--file", wp_file, "waypoint file, one \"x y z\" per line")->required();
  wpts->add_option("--speed", wp_speed, "segment cruise speed in m/s");

  CLI::App* fov = app.add_subcommand("fov-report", "print the swept sensor coverage numbers");
  spinner::SensorMount mount;
  fov->add_option("--vfov", mount.native_vertical_fov_deg, "native vertical fov in deg");
  fov->add_option("--hfov", mount.native_horizontal_fov_deg, "native horizontal fov in deg");
  fov->add_option("--tilt", mount.tilt_angle_deg, "mount tilt off the spin plane in deg");

  CLI::App* report = app.add_subcommand("report", "print a table from metrics CSV files");
  std::vector<std::string> metrics_files;
  report->add_option("files", metrics_files, "metrics CSV files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (hover->parsed()) {
      const spinner::StackConfig stack = stack_from(o);
      const double duration = o.duration > 0.0 ? o.duration : 10.0;
      spinner::Scenario sc =
          spinner::hover_scenario(stack, o.plate_width_mm, o.seed, duration, at_rest);
      return run_and_emit(std::move(sc), o);
    }
    if (lemn->parsed()) {
      const spinner::StackConfig stack = stack_from(o);
      spinner::Scenario sc =
          spinner::lemniscate_scenario(stack, o.seed, !clean, o.plate_width_mm);
      return run_and_emit(std::move(sc), o);
    }
    if (gust->parsed()) {
      const spinner::StackConfig stack = stack_from(o);
      spinner::Scenario sc = spinner::gust_scenario(stack, o.seed, gust_speed, gust_on, gust_off,
                                                    18.0, o.plate_width_mm);
      return run_and_emit(std::move(sc), o);
    }
    if (sweep->parsed()) return run_plate_sweep(o);
    if (wpts->parsed()) {
      const spinner::StackConfig stack = stack_from(o);
      const std::vector<spinner::Vec3> pts = spinner::load_waypoints(wp_file);
      spinner::Scenario sc =
          spinner::waypoint_scenario(stack, pts, wp_speed, o.seed, o.plate_width_mm);
      return run_and_emit(std::move(sc), o);
    }
    if (fov->parsed()) return run_fov_report(mount);
    if (report->parsed()) {
      std::fputs(spinner::report_table_from_files(metrics_files).c_str(), stdout);
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
