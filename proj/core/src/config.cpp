#include "cempid/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cempid/errors.hpp"
#include "cempid/policy.hpp"

namespace cempid {

namespace {

using json = nlohmann::json;

template <int N>
Eigen::Matrix<double, N, 1> read_vec(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw ConfigError(fmt::format("'{}' must be an array of {} numbers", key, N));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!j[i].is_number()) throw ConfigError(fmt::format("'{}' has a non-numeric entry", key));
    v(i) = j[i].get<double>();
  }
  return v;
}

/// Accepts a 6x6 nested array or a 6-vector diagonal shorthand.
Mat6 read_mat6(const json& j, const std::string& key) {
  if (j.is_array() && j.size() == 6 && j[0].is_number()) {
    return read_vec<6>(j, key).asDiagonal();
  }
  if (!j.is_array() || j.size() != 6) {
    throw ConfigError(fmt::format("'{}' must be a 6x6 matrix or a 6-vector diagonal", key));
  }
  Mat6 m;
  for (int r = 0; r < 6; ++r) m.row(r) = read_vec<6>(j[r], key).transpose();
  return m;
}

double read_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(fmt::format("'{}' must be a number", key));
  return j.get<double>();
}

std::size_t read_count(const json& j, const std::string& key) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
  }
  return j.get<std::size_t>();
}

std::uint64_t read_seed(const json& j, const std::string& key) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0)) {
    throw ConfigError(fmt::format("'{}' must be a non-negative integer", key));
  }
  return j.get<std::uint64_t>();
}

bool read_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) throw ConfigError(fmt::format("'{}' must be a boolean", key));
  return j.get<bool>();
}

void warn_unknown(const json& section, const std::string& name,
                  std::initializer_list<const char*> known) {
  const std::set<std::string> k(known.begin(), known.end());
  for (const auto& [key, _] : section.items()) {
    if (!k.count(key)) spdlog::warn("config: unknown key '{}.{}' ignored", name, key);
  }
}

json vec_json(const auto& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const Mat6& m) {
  json a = json::array();
  for (int r = 0; r < 6; ++r) a.push_back(vec_json(Vec6(m.row(r).transpose())));
  return a;
}

void parse_bounds(const json& j, const std::string& key, Vec6& lo, Vec6& hi) {
  if (!j.is_array() || j.size() != 6) {
    throw ConfigError(fmt::format("'{}' must be six [lo, hi] pairs", key));
  }
  for (int i = 0; i < 6; ++i) {
    const Eigen::Vector2d p = read_vec<2>(j[i], key);
    lo(i) = p(0);
    hi(i) = p(1);
  }
}

json bounds_json(const Vec6& lo, const Vec6& hi) {
  json a = json::array();
  for (int i = 0; i < 6; ++i) a.push_back({lo(i), hi(i)});
  return a;
}

CurrentSpec parse_current(const json& j, const std::string& key, CurrentSpec c) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", key));
  warn_unknown(j, key, {"v_c", "h_c", "j_c"});
  if (j.contains("v_c")) c.v_c = read_number(j["v_c"], key + ".v_c");
  if (j.contains("h_c")) c.h_c = read_number(j["h_c"], key + ".h_c");
  if (j.contains("j_c")) c.j_c = read_number(j["j_c"], key + ".j_c");
  return c;
}

json current_json(const CurrentSpec& c) { return {{"v_c", c.v_c}, {"h_c", c.h_c}, {"j_c", c.j_c}}; }

void default_bounds(Vec6& lo, Vec6& hi) {
  // Yaw has no kinematic singularity, so its bound is the full half-turn.
  hi << 2.0, 2.0, 2.0, 0.3, 0.3, std::numbers::pi;
  lo = -hi;
}

void parse_vehicle(const json& j, VehicleModel& m) {
  warn_unknown(j, "vehicle",
               {"rigid_body_mass_matrix", "added_mass_matrix", "linear_damping",
                "quadratic_damping", "weight_N", "buoyancy_N", "cog_to_cob_offset",
                "thruster_allocation_B"});
  auto has = [&](const char* key) {
    if (j.contains(key)) return true;
    spdlog::warn("config: vehicle.{} missing, using the default model value", key);
    return false;
  };
  if (has("rigid_body_mass_matrix")) {
    m.rigid_body_mass_matrix = read_mat6(j["rigid_body_mass_matrix"], "vehicle.rigid_body_mass_matrix");
  }
  if (has("added_mass_matrix")) {
    m.added_mass_matrix = read_mat6(j["added_mass_matrix"], "vehicle.added_mass_matrix");
  }
  if (has("linear_damping")) m.linear_damping = read_mat6(j["linear_damping"], "vehicle.linear_damping");
  if (has("quadratic_damping")) {
    m.quadratic_damping = read_vec<6>(j["quadratic_damping"], "vehicle.quadratic_damping");
  }
  if (has("weight_N")) m.weight_N = read_number(j["weight_N"], "vehicle.weight_N");
  if (has("buoyancy_N")) m.buoyancy_N = read_number(j["buoyancy_N"], "vehicle.buoyancy_N");
  if (has("cog_to_cob_offset")) {
    m.cog_to_cob_offset = read_vec<3>(j["cog_to_cob_offset"], "vehicle.cog_to_cob_offset");
  }
  if (has("thruster_allocation_B")) {
    m.thruster_allocation_B = read_mat6(j["thruster_allocation_B"], "vehicle.thruster_allocation_B");
  }
}

void parse_controller(const json& j, ControllerConfig& c) {
  warn_unknown(j, "controller",
               {"control_period_s", "setpoint", "stochastic_actions", "u_max", "naive_epsilon",
                "input_scale", "constraint_order"});
  if (j.contains("control_period_s")) {
    c.control_period_s = read_number(j["control_period_s"], "controller.control_period_s");
  }
  if (j.contains("setpoint")) c.setpoint = read_vec<6>(j["setpoint"], "controller.setpoint");
  if (j.contains("stochastic_actions")) {
    c.stochastic_actions = read_bool(j["stochastic_actions"], "controller.stochastic_actions");
  }
  if (j.contains("u_max")) {
    if (j["u_max"].is_null()) {
      c.u_max.reset();
    } else {
      c.u_max = read_number(j["u_max"], "controller.u_max");
    }
  }
  if (j.contains("naive_epsilon")) c.naive_epsilon = read_number(j["naive_epsilon"], "controller.naive_epsilon");
  if (j.contains("input_scale")) {
    if (j["input_scale"].is_null()) {
      c.input_scale.reset();
    } else {
      c.input_scale = read_vec<18>(j["input_scale"], "controller.input_scale");
    }
  }
  if (j.contains("constraint_order")) {
    const json& o = j["constraint_order"];
    if (o == "spectral") {
      c.constraint_order = MatrixOrder::kSpectral;
    } else if (o == "loewner") {
      c.constraint_order = MatrixOrder::kLoewner;
    } else {
      throw ConfigError("controller.constraint_order must be 'spectral' or 'loewner'");
    }
  }
}

void parse_cem(const json& j, CemSettings& c) {
  warn_unknown(j, "cem",
               {"population", "elite_fraction", "noise_var", "init_mean", "init_var", "epochs",
                "checkpoint_every", "threads"});
  if (j.contains("population")) c.population = read_count(j["population"], "cem.population");
  if (j.contains("elite_fraction")) c.elite_fraction = read_number(j["elite_fraction"], "cem.elite_fraction");
  if (j.contains("noise_var")) c.noise_var = read_number(j["noise_var"], "cem.noise_var");
  if (j.contains("init_mean")) c.init_mean = read_number(j["init_mean"], "cem.init_mean");
  if (j.contains("init_var")) c.init_var = read_number(j["init_var"], "cem.init_var");
  if (j.contains("epochs")) c.epochs = read_count(j["epochs"], "cem.epochs");
  if (j.contains("checkpoint_every")) {
    c.checkpoint_every = read_count(j["checkpoint_every"], "cem.checkpoint_every");
  }
  if (j.contains("threads")) c.threads = read_count(j["threads"], "cem.threads");
}

void parse_train_scenario(const json& j, ScenarioSpec& s) {
  warn_unknown(j, "scenarios.train",
               {"kind", "episode_steps", "init_pose_bounds", "sensor_noise_std",
                "actuator_noise_std", "current"});
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("scenarios.train.kind must be a string");
    s.kind = parse_scenario(j["kind"].get<std::string>());
  }
  if (j.contains("episode_steps")) s.episode_steps = read_count(j["episode_steps"], "scenarios.train.episode_steps");
  if (j.contains("init_pose_bounds")) {
    parse_bounds(j["init_pose_bounds"], "scenarios.train.init_pose_bounds", s.init_pose_lo, s.init_pose_hi);
  }
  if (j.contains("sensor_noise_std")) {
    s.sensor_noise_std = read_vec<6>(j["sensor_noise_std"], "scenarios.train.sensor_noise_std");
  }
  if (j.contains("actuator_noise_std")) {
    s.actuator_noise_std = read_vec<6>(j["actuator_noise_std"], "scenarios.train.actuator_noise_std");
  }
  if (j.contains("current")) s.current = parse_current(j["current"], "scenarios.train.current", s.current);
}

void parse_eval(const json& j, EvalSettings& e) {
  warn_unknown(j, "scenarios.eval",
               {"episodes", "episode_steps", "init_pose_bounds", "sensor_noise_std",
                "actuator_noise_std", "current"});
  if (j.contains("episodes")) e.episodes = read_count(j["episodes"], "scenarios.eval.episodes");
  if (j.contains("episode_steps")) e.episode_steps = read_count(j["episode_steps"], "scenarios.eval.episode_steps");
  if (j.contains("init_pose_bounds")) {
    parse_bounds(j["init_pose_bounds"], "scenarios.eval.init_pose_bounds", e.init_pose_lo, e.init_pose_hi);
  }
  if (j.contains("sensor_noise_std")) {
    e.sensor_noise_std = read_vec<6>(j["sensor_noise_std"], "scenarios.eval.sensor_noise_std");
  }
  if (j.contains("actuator_noise_std")) {
    e.actuator_noise_std = read_vec<6>(j["actuator_noise_std"], "scenarios.eval.actuator_noise_std");
  }
  if (j.contains("current")) e.current = parse_current(j["current"], "scenarios.eval.current", e.current);
}

json to_json(const Config& c, bool include_runtime) {
  json j;
  const VehicleModel& v = c.vehicle;
  j["vehicle"] = {
      {"rigid_body_mass_matrix", mat_json(v.rigid_body_mass_matrix)},
      {"added_mass_matrix", mat_json(v.added_mass_matrix)},
      {"linear_damping", mat_json(v.linear_damping)},
      {"quadratic_damping", vec_json(v.quadratic_damping)},
      {"weight_N", v.weight_N},
      {"buoyancy_N", v.buoyancy_N},
      {"cog_to_cob_offset", vec_json(v.cog_to_cob_offset)},
      {"thruster_allocation_B", mat_json(v.thruster_allocation_B)},
  };
  const ControllerConfig& k = c.controller;
  j["controller"] = {
      {"control_period_s", k.control_period_s},
      {"setpoint", vec_json(k.setpoint)},
      {"stochastic_actions", k.stochastic_actions},
      {"u_max", k.u_max ? json(*k.u_max) : json(nullptr)},
      {"naive_epsilon", k.naive_epsilon},
      {"input_scale", k.input_scale ? vec_json(*k.input_scale) : json(nullptr)},
      {"constraint_order", k.constraint_order == MatrixOrder::kSpectral ? "spectral" : "loewner"},
  };
  j["cem"] = {
      {"population", c.cem.population},   {"elite_fraction", c.cem.elite_fraction},
      {"noise_var", c.cem.noise_var},     {"init_mean", c.cem.init_mean},
      {"init_var", c.cem.init_var},       {"epochs", c.cem.epochs},
      {"checkpoint_every", c.cem.checkpoint_every},
  };
  if (include_runtime) j["cem"]["threads"] = c.cem.threads;
  const ScenarioSpec& t = c.train_scenario;
  j["scenarios"]["train"] = {
      {"kind", std::string(scenario_name(t.kind))},
      {"episode_steps", t.episode_steps},
      {"init_pose_bounds", bounds_json(t.init_pose_lo, t.init_pose_hi)},
      {"sensor_noise_std", vec_json(t.sensor_noise_std)},
      {"actuator_noise_std", vec_json(t.actuator_noise_std)},
      {"current", current_json(t.current)},
  };
  const EvalSettings& e = c.eval;
  j["scenarios"]["eval"] = {
      {"episodes", e.episodes},
      {"episode_steps", e.episode_steps},
      {"init_pose_bounds", bounds_json(e.init_pose_lo, e.init_pose_hi)},
      {"sensor_noise_std", vec_json(e.sensor_noise_std)},
      {"actuator_noise_std", vec_json(e.actuator_noise_std)},
      {"current", current_json(e.current)},
  };
  j["rng"] = {{"master_seed", c.rng.master_seed}, {"basis_seed", c.rng.basis_seed}};
  return j;
}

}  // namespace

std::string_view scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kNone:
      return "none";
    case ScenarioKind::kSensorNoise:
      return "sensor";
    case ScenarioKind::kActuatorNoiseWithCurrent:
      return "actuator-current";
  }
  return "none";
}

ScenarioKind parse_scenario(std::string_view name) {
  for (ScenarioKind k : kAllScenarios) {
    if (scenario_name(k) == name) return k;
  }
  throw ConfigError(fmt::format("unknown scenario '{}' (none|sensor|actuator-current)", name));
}

void ScenarioSpec::validate() const {
  if (episode_steps < 1) throw ConfigError("scenario episode_steps must be >= 1");
  if ((sensor_noise_std.array() < 0.0).any() || (actuator_noise_std.array() < 0.0).any() ||
      !sensor_noise_std.allFinite() || !actuator_noise_std.allFinite()) {
    throw ConfigError("scenario noise standard deviations must be finite and >= 0");
  }
  if (!(current.v_c >= 0.0)) throw ConfigError("current speed v_c must be >= 0");
  if ((init_pose_hi.array() < init_pose_lo.array()).any()) {
    throw ConfigError("init pose bounds need lo <= hi");
  }
  if (std::max(std::abs(init_pose_lo(kPitch)), std::abs(init_pose_hi(kPitch))) >=
      std::numbers::pi / 2 - kPitchGuard) {
    throw ConfigError("init pitch bounds reach the Euler singularity");
  }
}

Vec18 ControllerConfig::resolved_input_scale(const VehicleModel& model) const {
  return input_scale ? *input_scale : default_input_scale(model.total_mass());
}

EvalSettings::EvalSettings() {
  default_bounds(init_pose_lo, init_pose_hi);
  sensor_noise_std << 0.05, 0.05, 0.05, 0.02, 0.02, 0.02;
  actuator_noise_std << 100.0, 100.0, 100.0, 50.0, 50.0, 50.0;
  current = CurrentSpec{0.5, std::numbers::pi / 4, 0.0};
}

ScenarioSpec EvalSettings::scenario(ScenarioKind kind) const {
  ScenarioSpec s;
  s.kind = kind;
  s.episode_steps = episode_steps;
  s.init_pose_lo = init_pose_lo;
  s.init_pose_hi = init_pose_hi;
  if (kind == ScenarioKind::kSensorNoise) s.sensor_noise_std = sensor_noise_std;
  if (kind == ScenarioKind::kActuatorNoiseWithCurrent) {
    s.actuator_noise_std = actuator_noise_std;
    s.current = current;
  }
  return s;
}

ScenarioSpec Config::default_train_scenario() {
  ScenarioSpec s;
  s.kind = ScenarioKind::kNone;
  s.episode_steps = 200;
  default_bounds(s.init_pose_lo, s.init_pose_hi);
  return s;
}

void Config::validate() const {
  vehicle.validate();
  if (!(controller.control_period_s > 0.0)) throw ConfigError("control period must be > 0");
  if (!controller.setpoint.allFinite() ||
      std::abs(controller.setpoint(kPitch)) >= std::numbers::pi / 2 - kPitchGuard) {
    throw ConfigError("setpoint must be finite and away from the pitch singularity");
  }
  if (controller.u_max && !(*controller.u_max > 0.0)) throw ConfigError("u_max must be > 0");
  if (!(controller.naive_epsilon > 0.0)) throw ConfigError("naive_epsilon must be > 0");
  if (controller.input_scale &&
      (!(controller.input_scale->array() > 0.0).all() || !controller.input_scale->allFinite())) {
    throw ConfigError("input_scale entries must be finite and > 0");
  }
  if (cem.population < 1) throw ConfigError("cem.population must be >= 1");
  if (!(cem.elite_fraction > 0.0 && cem.elite_fraction <= 1.0)) {
    throw ConfigError("cem.elite_fraction must lie in (0, 1]");
  }
  if (std::floor(static_cast<double>(cem.population) * cem.elite_fraction + 1e-9) < 1.0) {
    throw ConfigError("cem population * elite_fraction keeps no elites");
  }
  if (!(cem.noise_var >= 0.0) || !(cem.init_var > 0.0) || !std::isfinite(cem.init_mean)) {
    throw ConfigError("cem noise_var must be >= 0, init_var > 0, init_mean finite");
  }
  if (cem.epochs < 1) throw ConfigError("cem.epochs must be >= 1");
  train_scenario.validate();
  if (eval.episodes < 1) throw ConfigError("scenarios.eval.episodes must be >= 1");
  for (ScenarioKind k : kAllScenarios) eval.scenario(k).validate();
}

std::string Config::digest() const { return fnv1a_hex(to_json(*this, false).dump()); }

Config parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text.begin(), json_text.end());
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!j.is_object()) throw ConfigError("config root must be an object");
  warn_unknown(j, "<root>", {"vehicle", "controller", "cem", "scenarios", "rng"});

  Config c;
  auto section = [&](const json& parent, const char* key) -> const json* {
    if (!parent.contains(key)) return nullptr;
    if (!parent[key].is_object()) throw ConfigError(fmt::format("'{}' must be an object", key));
    return &parent[key];
  };
  if (const json* s = section(j, "vehicle")) {
    parse_vehicle(*s, c.vehicle);
  } else {
    spdlog::warn("config: no vehicle section, using the default model");
  }
  if (const json* s = section(j, "controller")) parse_controller(*s, c.controller);
  if (const json* s = section(j, "cem")) parse_cem(*s, c.cem);
  if (const json* s = section(j, "scenarios")) {
    warn_unknown(*s, "scenarios", {"train", "eval"});
    if (const json* t = section(*s, "train")) parse_train_scenario(*t, c.train_scenario);
    if (const json* e = section(*s, "eval")) parse_eval(*e, c.eval);
  }
  if (const json* s = section(j, "rng")) {
    warn_unknown(*s, "rng", {"master_seed", "basis_seed"});
    if (s->contains("master_seed")) c.rng.master_seed = read_seed((*s)["master_seed"], "rng.master_seed");
    if (s->contains("basis_seed")) c.rng.basis_seed = read_seed((*s)["basis_seed"], "rng.basis_seed");
  }
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const Config& config) { return to_json(config, true).dump(2); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

}  // namespace cempid
