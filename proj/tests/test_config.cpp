#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "cempid/config.hpp"
#include "cempid/errors.hpp"

using namespace cempid;

TEST(Config, DefaultsMatchPublishedTrainingSetup) {
  const Config c;
  EXPECT_EQ(c.cem.population, 25u);
  EXPECT_DOUBLE_EQ(c.cem.elite_fraction, 0.2);
  EXPECT_DOUBLE_EQ(c.cem.noise_var, 0.1);
  EXPECT_EQ(c.cem.epochs, 200u);
  EXPECT_EQ(c.cem.checkpoint_every, 10u);
  EXPECT_EQ(c.train_scenario.episode_steps, 200u);
  EXPECT_EQ(c.train_scenario.kind, ScenarioKind::kNone);
  EXPECT_EQ(c.eval.episode_steps, 2000u);
  EXPECT_EQ(c.eval.episodes, 10u);
  EXPECT_DOUBLE_EQ(c.controller.control_period_s, 0.05);
  EXPECT_DOUBLE_EQ(c.controller.naive_epsilon, 1e-3);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, EmptyDocumentGivesDefaults) {
  const Config c = parse_config("{}");
  EXPECT_EQ(c.digest(), Config{}.digest());
}

TEST(Config, JsonRoundTrip) {
  Config c;
  c.cem.population = 8;
  c.cem.init_var = 0.3;
  c.controller.u_max = 500.0;
  c.controller.stochastic_actions = false;
  c.controller.constraint_order = MatrixOrder::kLoewner;
  c.vehicle.weight_N += 12.0;
  c.vehicle.linear_damping(0, 1) = 3.0;
  c.train_scenario.init_pose_lo(0) = 1.5;
  c.train_scenario.init_pose_hi(0) = 2.0;
  c.rng.master_seed = 42;
  const Config d = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(d), config_to_json(c));
  EXPECT_EQ(d.digest(), c.digest());
  EXPECT_EQ(*d.controller.u_max, 500.0);
  EXPECT_EQ(d.vehicle.linear_damping(0, 1), 3.0);
}

TEST(Config, DigestIgnoresThreadsOnly) {
  Config a, b;
  b.cem.threads = 8;
  EXPECT_EQ(a.digest(), b.digest());
  b.cem.noise_var = 0.2;
  EXPECT_NE(a.digest(), b.digest());
  EXPECT_EQ(a.digest().size(), 16u);
}

TEST(Config, DiagonalShorthandForMatrices) {
  const Config c = parse_config(R"({"vehicle": {"linear_damping": [1, 2, 3, 4, 5, 6]}})");
  EXPECT_EQ(c.vehicle.linear_damping(2, 2), 3.0);
  EXPECT_EQ(c.vehicle.linear_damping(2, 3), 0.0);
}

TEST(Config, ScenarioNames) {
  EXPECT_EQ(parse_scenario("none"), ScenarioKind::kNone);
  EXPECT_EQ(parse_scenario("sensor"), ScenarioKind::kSensorNoise);
  EXPECT_EQ(parse_scenario("actuator-current"), ScenarioKind::kActuatorNoiseWithCurrent);
  EXPECT_THROW(parse_scenario("storm"), ConfigError);
  for (ScenarioKind k : kAllScenarios) EXPECT_EQ(parse_scenario(scenario_name(k)), k);
}

TEST(Config, EvalScenariosCarryTheirDisturbances) {
  const EvalSettings e;
  const ScenarioSpec none = e.scenario(ScenarioKind::kNone);
  EXPECT_EQ(none.sensor_noise_std, Vec6::Zero());
  EXPECT_EQ(none.actuator_noise_std, Vec6::Zero());
  EXPECT_EQ(none.current.v_c, 0.0);
  const ScenarioSpec sensor = e.scenario(ScenarioKind::kSensorNoise);
  EXPECT_GT(sensor.sensor_noise_std.minCoeff(), 0.0);
  EXPECT_EQ(sensor.actuator_noise_std, Vec6::Zero());
  const ScenarioSpec act = e.scenario(ScenarioKind::kActuatorNoiseWithCurrent);
  EXPECT_EQ(act.sensor_noise_std, Vec6::Zero());
  EXPECT_GT(act.actuator_noise_std.minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(act.current.v_c, 0.5);
  EXPECT_DOUBLE_EQ(act.current.h_c, std::numbers::pi / 4);
  EXPECT_EQ(act.episode_steps, 2000u);
}

TEST(Config, RejectsInvalidValues) {
  EXPECT_THROW(parse_config("not json"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"cem": {"population": -3}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"cem": {"population": 4, "elite_fraction": 0.2}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle": {"linear_damping": [1, 2]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"vehicle": {"added_mass_matrix": [-5000, 0, 0, 0, 0, 0]}})"),
               ConfigError);
  EXPECT_THROW(parse_config(R"({"controller": {"control_period_s": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"controller": {"constraint_order": "elementwise"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenarios": {"train": {"episode_steps": 0}}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"scenarios": {"train": {"kind": "storm"}}})"), ConfigError);
  EXPECT_THROW(
      parse_config(R"({"scenarios": {"train": {"init_pose_bounds": [[0,0],[0,0],[0,0],[0,0],[-1.6,1.6],[0,0]]}}})"),
      ConfigError);
  EXPECT_THROW(parse_config(R"({"scenarios": {"eval": {"sensor_noise_std": [-1,0,0,0,0,0]}}})"),
               ConfigError);
}

TEST(Config, MissingFileIsIoError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), IoError);
}

TEST(Config, ShippedConfigsLoad) {
  const std::filesystem::path dir = CEMPID_CONFIG_DIR;
  const Config def = load_config((dir / "default.json").string());
  EXPECT_EQ(def.digest(), Config{}.digest());
  const Config smoke = load_config((dir / "smoke.json").string());
  EXPECT_EQ(smoke.cem.population, 8u);
  EXPECT_EQ(smoke.cem.epochs, 20u);
  EXPECT_EQ(smoke.train_scenario.episode_steps, 100u);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}
