#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinner/indi.hpp"
#include "spinner/nmpc.hpp"
#include "spinner/vehicle.hpp"

namespace spinner {

// Flat "dotted.key = value" files: one pair per line, '#' comments, arrays
// in brackets. Later assignments win, so command-line overrides can be
// applied on top of a file.
struct ConfigMap {
  std::map<std::string, std::string> values;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double config_double(const std::string& key, const std::string& val) {
  char* end = nullptr;
  const double d = std::strtod(val.c_str(), &end);
  if (end == val.c_str() || *end != '\0')
    throw std::invalid_argument("config key '" + key + "' needs a number, got '" + val + "'");
  return d;
}

inline int config_int(const std::string& key, const std::string& val) {
  const double d = config_double(key, val);
  const int i = static_cast<int>(d);
  if (static_cast<double>(i) != d)
    throw std::invalid_argument("config key '" + key + "' needs an integer, got '" + val + "'");
  return i;
}

template <typename VecT>
VecT config_vector(const std::string& key, const std::string& val) {
  const std::string t = trim(val);
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw std::invalid_argument("config key '" + key + "' needs [a, b, ...], got '" + val + "'");
  std::stringstream ss(t.substr(1, t.size() - 2));
  std::string item;
  VecT out;
  int i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= out.size())
      throw std::invalid_argument("config key '" + key + "' has too many elements");
    out(i++) = config_double(key, trim(item));
  }
  if (i != out.size())
    throw std::invalid_argument("config key '" + key + "' needs exactly " +
                                std::to_string(out.size()) + " elements");
  return out;
}

}  // namespace detail

inline void apply_override(ConfigMap& cfg, const std::string& keyval) {
  const auto eq = keyval.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key=value, got '" + keyval + "'");
  const std::string key = detail::trim(keyval.substr(0, eq));
  const std::string val = detail::trim(keyval.substr(eq + 1));
  if (key.empty()) throw std::invalid_argument("override has an empty key: '" + keyval + "'");
  cfg.values[key] = val;
}

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    try {
      apply_override(cfg, t);
    } catch (const std::invalid_argument&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " is not key = value: '" + t + "'");
    }
  }
  return cfg;
}

inline ConfigMap load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

struct StackConfig {
  VehicleParams vehicle;
  NmpcConfig nmpc;
  IndiConfig indi;
};

// Builds the controller stack parameters from a key map. Every key must be
// recognized; typos fail loudly with the offending name.
inline StackConfig make_stack_config(const ConfigMap& cfg) {
  StackConfig out;
  using detail::config_double;
  using detail::config_int;
  using detail::config_vector;

  for (const auto& [key, val] : cfg.values) {
    if (key == "vehicle.mass") out.vehicle.mass = config_double(key, val);
    else if (key == "vehicle.inertia_diag") out.vehicle.inertia_diag = config_vector<Vec3>(key, val);
    else if (key == "vehicle.drag_matrix_diag") out.vehicle.drag_matrix_diag = config_vector<Vec3>(key, val);
    else if (key == "vehicle.thrust_coeff") out.vehicle.thrust_coeff = config_double(key, val);
    else if (key == "vehicle.counter_torque_coeff") out.vehicle.counter_torque_coeff = config_double(key, val);
    else if (key == "vehicle.arm_x1") out.vehicle.arm_x1 = config_double(key, val);
    else if (key == "vehicle.arm_x2") out.vehicle.arm_x2 = config_double(key, val);
    else if (key == "vehicle.arm_y0") out.vehicle.arm_y0 = config_double(key, val);
    else if (key == "vehicle.arm_y1") out.vehicle.arm_y1 = config_double(key, val);
    else if (key == "vehicle.arm_y2") out.vehicle.arm_y2 = config_double(key, val);
    else if (key == "vehicle.gravity") out.vehicle.gravity = config_double(key, val);
    else if (key == "vehicle.rotor_thrust_min") out.vehicle.rotor_thrust_min = config_double(key, val);
    else if (key == "vehicle.rotor_thrust_max") out.vehicle.rotor_thrust_max = config_double(key, val);
    else if (key == "vehicle.rot_damping_xy") out.vehicle.rot_damping_xy = config_double(key, val);
    else if (key == "nmpc.horizon_steps") out.nmpc.horizon_steps = config_int(key, val);
    else if (key == "nmpc.step") out.nmpc.step = config_double(key, val);
    else if (key == "nmpc.input_lower") out.nmpc.input_lower = config_double(key, val);
    else if (key == "nmpc.input_upper") out.nmpc.input_upper = config_double(key, val);
    else if (key == "nmpc.max_sqp_iters") out.nmpc.max_sqp_iters = config_int(key, val);
    else if (key == "nmpc.kkt_tol") out.nmpc.kkt_tol = config_double(key, val);
    else if (key == "nmpc.fd_step") out.nmpc.fd_step = config_double(key, val);
    else if (key == "nmpc.weight_position") out.nmpc.weights.pos = config_vector<Vec3>(key, val);
    else if (key == "nmpc.weight_attitude") out.nmpc.weights.att = config_vector<Vec4>(key, val);
    else if (key == "nmpc.weight_velocity") out.nmpc.weights.vel = config_vector<Vec3>(key, val);
    else if (key == "nmpc.weight_rate") out.nmpc.weights.rate = config_vector<Vec3>(key, val);
    else if (key == "nmpc.weight_input") out.nmpc.weights.input = config_vector<Vec3>(key, val);
    else if (key == "nmpc.terminal_position") out.nmpc.terminal_weights.pos = config_vector<Vec3>(key, val);
    else if (key == "nmpc.terminal_attitude") out.nmpc.terminal_weights.att = config_vector<Vec4>(key, val);
    else if (key == "nmpc.terminal_velocity") out.nmpc.terminal_weights.vel = config_vector<Vec3>(key, val);
    else if (key == "nmpc.terminal_rate") out.nmpc.terminal_weights.rate = config_vector<Vec3>(key, val);
    else if (key == "nmpc.terminal_input") out.nmpc.terminal_weights.input = config_vector<Vec3>(key, val);
    else if (key == "indi.cutoff_hz") out.indi.cutoff_hz = config_double(key, val);
    else if (key == "indi.rate_gain") out.indi.rate_gain = config_vector<Vec3>(key, val);
    else throw std::invalid_argument("unknown config key: " + key);
  }

  out.vehicle.plate_yaw_drag_coeff = calibrate_plate_coeff(out.vehicle, kPlateRate30mm);
  out.vehicle.validate();
  out.nmpc.validate();
  out.indi.validate();
  return out;
}

}  // namespace spinner
