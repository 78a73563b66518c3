#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "spinner/config.hpp"

using namespace spinner;

TEST_CASE("config text parses keys, comments, and arrays", "[config]") {
  const ConfigMap cfg = parse_config_text(
      "# tuning\n"
      "vehicle.mass = 1.30   # heavier battery\n"
      "\n"
      "nmpc.horizon_steps=25\n"
      "nmpc.weight_position = [50, 50, 400]\n"
      "indi.rate_gain = [ 18.0, 18.0, 4.0 ]\n");
  REQUIRE(cfg.values.at("vehicle.mass") == "1.30");
  REQUIRE(cfg.values.at("nmpc.horizon_steps") == "25");

  const StackConfig sc = make_stack_config(cfg);
  REQUIRE(sc.vehicle.mass == 1.30);
  REQUIRE(sc.nmpc.horizon_steps == 25);
  REQUIRE((sc.nmpc.weights.pos - Vec3{50, 50, 400}).norm() == 0.0);
  REQUIRE((sc.indi.rate_gain - Vec3{18, 18, 4}).norm() == 0.0);
  // untouched fields keep their defaults
  REQUIRE(sc.nmpc.weights.att(3) == 0.0);
  REQUIRE(sc.nmpc.step == 0.05);
}

TEST_CASE("empty config reproduces the default stack", "[config]") {
  const StackConfig sc = make_stack_config(ConfigMap{});
  const VehicleParams def;
  REQUIRE(sc.vehicle.mass == def.mass);
  REQUIRE(sc.vehicle.plate_yaw_drag_coeff == Catch::Approx(def.plate_yaw_drag_coeff));
  REQUIRE(sc.nmpc.horizon_steps == 20);
  REQUIRE(sc.indi.cutoff_hz == 12.0);
}

TEST_CASE("unknown keys are rejected by name", "[config]") {
  ConfigMap cfg;
  apply_override(cfg, "nmpc.horizon=30");
  REQUIRE_THROWS_WITH(make_stack_config(cfg),
                      Catch::Matchers::ContainsSubstring("nmpc.horizon"));
}

TEST_CASE("malformed values are rejected with the key", "[config]") {
  {
    ConfigMap cfg;
    apply_override(cfg, "vehicle.mass=heavy");
    REQUIRE_THROWS_WITH(make_stack_config(cfg),
                        Catch::Matchers::ContainsSubstring("vehicle.mass"));
  }
  {
    ConfigMap cfg;
    apply_override(cfg, "nmpc.weight_position=[1,2]");
    REQUIRE_THROWS_AS(make_stack_config(cfg), std::invalid_argument);
  }
  {
    ConfigMap cfg;
    apply_override(cfg, "nmpc.weight_position=[1,2,3,4]");
    REQUIRE_THROWS_AS(make_stack_config(cfg), std::invalid_argument);
  }
  {
    ConfigMap cfg;
    apply_override(cfg, "nmpc.horizon_steps=2.5");
    REQUIRE_THROWS_AS(make_stack_config(cfg), std::invalid_argument);
  }
  {  // parses fine, fails stack validation
    ConfigMap cfg;
    apply_override(cfg, "vehicle.mass=-1");
    REQUIRE_THROWS_WITH(make_stack_config(cfg), Catch::Matchers::ContainsSubstring("mass"));
  }
}

TEST_CASE("overrides stack on top of earlier values", "[config]") {
  ConfigMap cfg = parse_config_text("nmpc.kkt_tol = 1e-4\n");
  apply_override(cfg, "nmpc.kkt_tol=1e-6");
  REQUIRE(make_stack_config(cfg).nmpc.kkt_tol == 1e-6);
  REQUIRE_THROWS_AS(apply_override(cfg, "no-equals-sign"), std::invalid_argument);
  REQUIRE_THROWS_AS(apply_override(cfg, "=5"), std::invalid_argument);
}

TEST_CASE("bad lines report their line number", "[config]") {
  REQUIRE_THROWS_WITH(parse_config_text("vehicle.mass = 1.2\njust words\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("config files load from disk and missing paths fail by name", "[config]") {
  const std::string path = "config_tmp.cfg";
  {
    std::ofstream f(path);
    f << "vehicle.gravity = 9.80\nnmpc.max_sqp_iters = 5\n";
  }
  const ConfigMap cfg = load_config_file(path);
  std::remove(path.c_str());
  const StackConfig sc = make_stack_config(cfg);
  REQUIRE(sc.vehicle.gravity == 9.80);
  REQUIRE(sc.nmpc.max_sqp_iters == 5);

  REQUIRE_THROWS_WITH(load_config_file("does_not_exist.cfg"),
                      Catch::Matchers::ContainsSubstring("does_not_exist.cfg"));
}
