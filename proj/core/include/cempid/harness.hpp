#pragma once

// Closed-loop episodes, the fixed-structure baseline controller, stability
// and tracking metrics, and the train / evaluate drivers.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <cempid/cem.hpp>
#include <cempid/config.hpp>
#include <cempid/lyapunov.hpp>
#include <cempid/pid.hpp>
#include <cempid/policy.hpp>
#include <cempid/vehicle.hpp>

namespace cempid {

enum class ControllerKind { kLbPid, kNaivePid };

std::string_view controller_name(ControllerKind kind);  // "lb_pid" | "naive_pid"

struct Controller {
  ControllerKind kind = ControllerKind::kNaivePid;
  /// Required for kLbPid.
  std::optional<PolicyWeights> weights;
  Vec18 input_scale = Vec18::Ones();
  bool stochastic_actions = true;

  static Controller naive();
  static Controller learned(PolicyWeights weights, const Vec18& input_scale, bool stochastic);
};

/// Spectral extremes of the gain matrices (real parts) and alpha.
struct GainDigest {
  double kp_min = 0.0, kp_max = 0.0;
  double ki_min = 0.0, ki_max = 0.0;
  double kd_min = 0.0, kd_max = 0.0;
  double alpha = 0.0;

  static GainDigest of(const GainSet& gains);
};

struct StepRecord {
  double t = 0.0;
  /// True pose at the start of the step.
  Vec6 eta = Vec6::Zero();
  /// mean_i (eta_d_i - eta_i)^2.
  double cost = 0.0;
  double v = 0.0;
  double v_dot = 0.0;
  /// False on the first step, which has no previous V.
  bool state_counted = false;
  bool state_stable = false;
  ConstraintFlags param_flags{};
  GainDigest gains;
  /// Commanded thruster input, before actuator noise.
  Vec6 u = Vec6::Zero();
  Vec6 actuator_noise = Vec6::Zero();
  bool saturated = false;
};

/// Independent seeds for the per-episode random streams.
struct EpisodeSeeds {
  std::uint64_t init_pose = 0;
  std::uint64_t sensor = 0;
  std::uint64_t actuator = 0;
  std::uint64_t policy = 0;

  static EpisodeSeeds from(std::uint64_t seed);
};

struct EpisodeResult {
  std::vector<StepRecord> records;
  /// Sum of per-step costs; +inf when the episode failed.
  double cost = 0.0;
  bool diverged = false;
  std::string failure;
};

/// Everything an episode needs besides the controller and scenario.
struct EpisodeContext {
  const VehicleModel& model;
  const SimilarityBasis& basis;
  const ControllerConfig& controller;
};

double step_cost(const Vec6& eta, const Vec6& eta_d);

/// Sum over records of mean squared pose error against eta_d.
double episode_cost(const std::vector<StepRecord>& records, const Vec6& eta_d = Vec6::Zero());

/// M1 = M2 = M3 = diag(0.5 - 1e-5) + 1e-5 * ones(6, 6).
Mat6 naive_structure_matrix();

/// Baseline gains: the fixed structure matrices through the equality
/// reparametrization at the current pose.
GainSet naive_gains(const Vec6& eta, const Vec6& eta_d, const VehicleModel& model,
                    double epsilon);

/// Draws the initial pose uniformly from the scenario bounds.
SimState initial_state(const ScenarioSpec& scenario, std::uint64_t seed);

/// Runs one closed-loop episode. Numeric failures in the plant or the gain
/// construction truncate the episode and mark it diverged.
EpisodeResult run_episode(const Controller& controller, const ScenarioSpec& scenario,
                          const EpisodeContext& ctx, const EpisodeSeeds& seeds);

struct StabilityPercentages {
  /// NaN when no step had a previous V to compare against.
  double state_pct = 0.0;
  double param_pct = 0.0;
};

/// Constraint subset used for the parameter percentage.
using ConstraintMask = std::array<bool, 5>;
inline constexpr ConstraintMask kAllConstraints = {true, true, true, true, true};
inline constexpr ConstraintMask kConstructiveConstraints = {true, true, true, false, true};

StabilityPercentages stability_percentages(const std::vector<StepRecord>& records,
                                           const ConstraintMask& mask = kAllConstraints);

/// Percentages over records[0..k] for every k.
std::vector<StabilityPercentages> cumulative_stability(
    const std::vector<StepRecord>& records, const ConstraintMask& mask = kAllConstraints);

struct RunMetadata {
  std::uint64_t master_seed = 0;
  std::string config_digest;
  std::uint64_t basis_seed = 0;
  std::string scenario;
  std::string controller_id;
  std::string code_version;
};

std::string code_version();

/// Training seeds: the initial pose is shared by all candidates of one
/// iteration, noise and action sampling streams are per candidate.
EpisodeSeeds training_seeds(std::uint64_t master, std::size_t iteration, std::size_t candidate);

/// Evaluation seeds, shared by both controllers for a fair comparison.
EpisodeSeeds evaluation_seeds(std::uint64_t master, ScenarioKind scenario, std::size_t episode);

CemConfig cem_config_for_policy(const CemSettings& settings);

struct TrainArtifacts {
  PolicyWeights best_weights;
  double best_cost = 0.0;
  CemState final_state;
  std::filesystem::path out_dir;
};

/// CEM training of the policy on the training scenario. Writes history.csv
/// every iteration, checkpoint_epoch_NNNN.json every checkpoint_every
/// iterations, best_weights.json and metadata.json.
TrainArtifacts train(const Config& config, const std::filesystem::path& out_dir);

struct EvalRequest {
  /// LB policy to evaluate; the naive baseline always runs alongside.
  std::optional<PolicyFile> policy;
  std::vector<ScenarioKind> scenarios{kAllScenarios.begin(), kAllScenarios.end()};
  std::optional<std::size_t> episodes;
  std::filesystem::path out_dir;
};

struct AggregateRow {
  std::string controller;
  std::string scenario;
  std::size_t episodes = 0;
  std::size_t diverged = 0;
  double cost_mean = 0.0, cost_std = 0.0;
  double state_pct_mean = 0.0, state_pct_std = 0.0;
  double param_pct_mean = 0.0, param_pct_std = 0.0;
  double param_constructive_pct_mean = 0.0;
  double constraint4_pct_mean = 0.0;
};

struct EvalReport {
  std::vector<AggregateRow> rows;
};

/// Runs the requested scenarios for each controller and writes traces,
/// stability curves, aggregate.csv, metadata.json and SVG plots.
EvalReport evaluate(const Config& config, const EvalRequest& request);

}  // namespace cempid
