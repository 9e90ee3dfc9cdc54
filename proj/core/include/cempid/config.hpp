#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <cempid/lyapunov.hpp>
#include <cempid/types.hpp>
#include <cempid/vehicle.hpp>

namespace cempid {

enum class ScenarioKind { kNone, kSensorNoise, kActuatorNoiseWithCurrent };

inline constexpr std::array<ScenarioKind, 3> kAllScenarios = {
    ScenarioKind::kNone, ScenarioKind::kSensorNoise, ScenarioKind::kActuatorNoiseWithCurrent};

/// CLI / file names: "none", "sensor", "actuator-current".
std::string_view scenario_name(ScenarioKind kind);
/// Throws ConfigError for unknown names.
ScenarioKind parse_scenario(std::string_view name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kNone;
  Vec6 sensor_noise_std = Vec6::Zero();
  Vec6 actuator_noise_std = Vec6::Zero();
  CurrentSpec current;
  std::size_t episode_steps = 200;
  /// Initial pose drawn uniformly per DoF from [lo_i, hi_i].
  Vec6 init_pose_lo = Vec6::Zero();
  Vec6 init_pose_hi = Vec6::Zero();

  void validate() const;
};

struct ControllerConfig {
  double control_period_s = 0.05;
  Vec6 setpoint = Vec6::Zero();
  /// Per-step sampled Lambda actions; false uses the distribution mean.
  bool stochastic_actions = true;
  /// Symmetric thruster clamp; disabled when empty.
  std::optional<double> u_max;
  double naive_epsilon = 1e-3;
  /// Policy input normalization; derived from the vehicle when empty.
  std::optional<Vec18> input_scale;
  MatrixOrder constraint_order = MatrixOrder::kSpectral;

  Vec18 resolved_input_scale(const VehicleModel& model) const;
};

struct CemSettings {
  std::size_t population = 25;
  double elite_fraction = 0.2;
  double noise_var = 0.1;
  double init_mean = 0.0;
  double init_var = 1.0;
  std::size_t epochs = 200;
  std::size_t checkpoint_every = 10;
  /// Worker threads; never changes results.
  std::size_t threads = 1;
};

/// Disturbance magnitudes shared by the evaluation scenarios.
struct EvalSettings {
  std::size_t episodes = 10;
  std::size_t episode_steps = 2000;
  Vec6 init_pose_lo;
  Vec6 init_pose_hi;
  Vec6 sensor_noise_std;
  Vec6 actuator_noise_std;
  CurrentSpec current;

  EvalSettings();
  ScenarioSpec scenario(ScenarioKind kind) const;
};

struct RngSettings {
  std::uint64_t master_seed = 0;
  std::uint64_t basis_seed = 1;
};

struct Config {
  VehicleModel vehicle = default_vehicle_model();
  ControllerConfig controller;
  CemSettings cem;
  ScenarioSpec train_scenario = default_train_scenario();
  EvalSettings eval;
  RngSettings rng;

  static ScenarioSpec default_train_scenario();

  void validate() const;
  /// Stable hex digest of the result-affecting settings (threads excluded).
  std::string digest() const;
};

/// Parses a JSON config document. Missing keys keep their defaults (vehicle
/// keys log a warning). Throws ConfigError for malformed values.
Config parse_config(std::string_view json_text);
/// Throws IoError when the file cannot be read.
Config load_config(const std::string& path);
/// Full JSON rendering, including defaults.
std::string config_to_json(const Config& config);

/// FNV-1a, 64 bit, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace cempid
