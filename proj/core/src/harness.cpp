#include "cempid/harness.hpp"

#include <cmath>
#include <limits>
#include <system_error>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cempid/errors.hpp"
#include "cempid/parallel.hpp"
#include "cempid/plot.hpp"
#include "cempid/report.hpp"
#include "cempid/rng.hpp"

#ifndef CEMPID_VERSION
#define CEMPID_VERSION "unknown"
#endif

namespace cempid {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kTrainTag = 0;
constexpr std::uint64_t kEvalTag = 1;

void spectral_range(const Mat6& m, double& lo, double& hi) {
  Eigen::EigenSolver<Mat6> es(m, false);
  if (es.info() != Eigen::Success) {
    lo = hi = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  lo = es.eigenvalues().real().minCoeff();
  hi = es.eigenvalues().real().maxCoeff();
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_output(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError(fmt::format("failed writing {}", path.string()));
}

json metadata_json(const RunMetadata& m, const Config& config) {
  json cfg = json::parse(config_to_json(config));
  cfg["cem"].erase("threads");
  return {{"master_seed", m.master_seed},   {"config_digest", m.config_digest},
          {"basis_seed", m.basis_seed},     {"scenario", m.scenario},
          {"controller_id", m.controller_id}, {"code_version", m.code_version},
          {"config", cfg}};
}

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();
};

MeanStd finite_mean_std(const std::vector<double>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  MeanStd out;
  if (n == 0) return out;
  out.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) {
    if (std::isfinite(v)) ss += (v - out.mean) * (v - out.mean);
  }
  out.stddev = std::sqrt(ss / static_cast<double>(n));
  return out;
}

GainSet controller_gains(const Controller& controller, const SimState& measured,
                         const EpisodeContext& ctx, RngStream& policy_rng) {
  const Vec6& eta_d = ctx.controller.setpoint;
  if (controller.kind == ControllerKind::kNaivePid) {
    return naive_gains(measured.eta, eta_d, ctx.model, ctx.controller.naive_epsilon);
  }
  const LoopState x = make_loop_state(measured, ctx.model);
  const ActionDistribution dist =
      forward(*controller.weights, normalize_input(x.x(), controller.input_scale));
  const LambdaAction action = controller.stochastic_actions ? sample_action(dist, policy_rng)
                                                            : deterministic_action(dist);
  return gains_from_lambda(action, ctx.basis, measured.eta, eta_d, ctx.model);
}

}  // namespace

std::string_view controller_name(ControllerKind kind) {
  return kind == ControllerKind::kLbPid ? "lb_pid" : "naive_pid";
}

Controller Controller::naive() { return Controller{}; }

Controller Controller::learned(PolicyWeights weights, const Vec18& input_scale, bool stochastic) {
  Controller c;
  c.kind = ControllerKind::kLbPid;
  c.weights = std::move(weights);
  c.input_scale = input_scale;
  c.stochastic_actions = stochastic;
  return c;
}

GainDigest GainDigest::of(const GainSet& gains) {
  GainDigest d;
  spectral_range(gains.kp, d.kp_min, d.kp_max);
  spectral_range(gains.ki, d.ki_min, d.ki_max);
  spectral_range(gains.kd, d.kd_min, d.kd_max);
  d.alpha = gains.alpha;
  return d;
}

EpisodeSeeds EpisodeSeeds::from(std::uint64_t seed) {
  return {derive_seed(seed, StreamPurpose::kInitPose), derive_seed(seed, StreamPurpose::kSensorNoise),
          derive_seed(seed, StreamPurpose::kActuatorNoise),
          derive_seed(seed, StreamPurpose::kPolicySampling)};
}

double step_cost(const Vec6& eta, const Vec6& eta_d) {
  return (eta_d - eta).squaredNorm() / 6.0;
}

double episode_cost(const std::vector<StepRecord>& records, const Vec6& eta_d) {
  double j = 0.0;
  for (const StepRecord& r : records) j += step_cost(r.eta, eta_d);
  return j;
}

Mat6 naive_structure_matrix() {
  Mat6 m = Mat6::Constant(1e-5);
  m.diagonal().setConstant(0.5 - 1e-5);
  m.diagonal().array() += 1e-5;
  return m;
}

GainSet naive_gains(const Vec6& eta, const Vec6& eta_d, const VehicleModel& model,
                    double epsilon) {
  const Mat6 m = naive_structure_matrix();
  return gains_from_structure(m, m, m, epsilon, eta, eta_d, model);
}

SimState initial_state(const ScenarioSpec& scenario, std::uint64_t seed) {
  RngStream rng(seed);
  SimState s;
  for (int i = 0; i < 6; ++i) s.eta(i) = rng.uniform(scenario.init_pose_lo(i), scenario.init_pose_hi(i));
  return s;
}

EpisodeResult run_episode(const Controller& controller, const ScenarioSpec& scenario,
                          const EpisodeContext& ctx, const EpisodeSeeds& seeds) {
  if (controller.kind == ControllerKind::kLbPid && !controller.weights) {
    throw Error("learned controller requires policy weights");
  }
  const double dt = ctx.controller.control_period_s;
  const Vec6& eta_d = ctx.controller.setpoint;
  RngStream sensor_rng(seeds.sensor);
  RngStream actuator_rng(seeds.actuator);
  RngStream policy_rng(seeds.policy);

  EpisodeResult result;
  result.records.reserve(scenario.episode_steps);
  SimState s = initial_state(scenario, seeds.init_pose);
  double v_prev = 0.0;
  try {
    for (std::size_t k = 0; k < scenario.episode_steps; ++k) {
      // Sensor noise only perturbs what the controller sees.
      SimState measured = s;
      for (int i = 0; i < 6; ++i) {
        if (scenario.sensor_noise_std(i) > 0.0) {
          measured.eta(i) += sensor_rng.normal(0.0, scenario.sensor_noise_std(i));
        }
      }

      const GainSet gains = controller_gains(controller, measured, ctx, policy_rng);
      StepRecord r;
      r.u = pid_control(measured, gains, eta_d, ctx.model);
      if (ctx.controller.u_max) r.saturated = saturate(r.u, *ctx.controller.u_max);

      // V is evaluated on the true loop state.
      const LoopState x = make_loop_state(s, ctx.model);
      r.t = s.t;
      r.eta = s.eta;
      r.cost = step_cost(s.eta, eta_d);
      r.v = lyapunov_value(x, gains, m_eta(s.eta, ctx.model));
      if (k > 0) {
        const StateStability st = state_stability_step(r.v, v_prev, dt, x.x().norm());
        r.v_dot = st.v_dot;
        r.state_counted = true;
        r.state_stable = st.stable;
      }
      r.param_flags =
          constraint_margins(gains, measured.eta, eta_d, ctx.model, ctx.controller.constraint_order)
              .flags();
      r.gains = GainDigest::of(gains);
      for (int i = 0; i < 6; ++i) {
        if (scenario.actuator_noise_std(i) > 0.0) {
          r.actuator_noise(i) = actuator_rng.normal(0.0, scenario.actuator_noise_std(i));
        }
      }
      result.records.push_back(r);
      v_prev = r.v;

      s = step_dynamics(s, r.u, scenario.current, r.actuator_noise, dt, ctx.model, eta_d);
    }
  } catch (const DivergenceError& e) {
    result.diverged = true;
    result.failure = e.what();
  } catch (const SingularityError& e) {
    result.diverged = true;
    result.failure = e.what();
  } catch (const IllConditionedError& e) {
    result.diverged = true;
    result.failure = e.what();
  }
  if ((s.err_integral.array().abs() >= kIntegralClamp).any()) {
    spdlog::debug("episode hit the error-integral clamp");
  }
  result.cost = result.diverged ? std::numeric_limits<double>::infinity()
                                : episode_cost(result.records, eta_d);
  return result;
}

StabilityPercentages stability_percentages(const std::vector<StepRecord>& records,
                                           const ConstraintMask& mask) {
  const std::vector<StabilityPercentages> curve = cumulative_stability(records, mask);
  if (curve.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  return curve.back();
}

std::vector<StabilityPercentages> cumulative_stability(const std::vector<StepRecord>& records,
                                                       const ConstraintMask& mask) {
  std::vector<StabilityPercentages> curve;
  curve.reserve(records.size());
  std::size_t counted = 0, stable = 0, param_ok = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const StepRecord& r = records[k];
    if (r.state_counted) {
      ++counted;
      if (r.state_stable) ++stable;
    }
    bool ok = true;
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (mask[c] && !r.param_flags[c]) ok = false;
    }
    if (ok) ++param_ok;
    StabilityPercentages p;
    p.state_pct = counted > 0 ? 100.0 * static_cast<double>(stable) / static_cast<double>(counted)
                              : std::numeric_limits<double>::quiet_NaN();
    p.param_pct = 100.0 * static_cast<double>(param_ok) / static_cast<double>(k + 1);
    curve.push_back(p);
  }
  return curve;
}

std::string code_version() { return CEMPID_VERSION; }

EpisodeSeeds training_seeds(std::uint64_t master, std::size_t iteration, std::size_t candidate) {
  return {derive_seed(master, StreamPurpose::kInitPose, {kTrainTag, iteration}),
          derive_seed(master, StreamPurpose::kSensorNoise, {kTrainTag, iteration, candidate}),
          derive_seed(master, StreamPurpose::kActuatorNoise, {kTrainTag, iteration, candidate}),
          derive_seed(master, StreamPurpose::kPolicySampling, {kTrainTag, iteration, candidate})};
}

EpisodeSeeds evaluation_seeds(std::uint64_t master, ScenarioKind scenario, std::size_t episode) {
  const auto s = static_cast<std::uint64_t>(scenario);
  return {derive_seed(master, StreamPurpose::kInitPose, {kEvalTag, s, episode}),
          derive_seed(master, StreamPurpose::kSensorNoise, {kEvalTag, s, episode}),
          derive_seed(master, StreamPurpose::kActuatorNoise, {kEvalTag, s, episode}),
          derive_seed(master, StreamPurpose::kPolicySampling, {kEvalTag, s, episode})};
}

CemConfig cem_config_for_policy(const CemSettings& settings) {
  CemConfig c;
  c.population_N = settings.population;
  c.elite_fraction_rho = settings.elite_fraction;
  c.noise_var = settings.noise_var;
  c.init_mean = VecX::Constant(PolicyArchitecture::kParameterCount, settings.init_mean);
  c.init_var = settings.init_var;
  return c;
}

TrainArtifacts train(const Config& config, const std::filesystem::path& out_dir) {
  config.validate();
  ensure_dir(out_dir);

  const SimilarityBasis basis = make_basis(config.rng.basis_seed);
  const EpisodeContext ctx{config.vehicle, basis, config.controller};
  const Vec18 scale = config.controller.resolved_input_scale(config.vehicle);
  const std::string digest = config.digest();
  const std::uint64_t master = config.rng.master_seed;

  const RunMetadata meta{master, digest, config.rng.basis_seed,
                         std::string(scenario_name(config.train_scenario.kind)),
                         std::string(controller_name(ControllerKind::kLbPid)), code_version()};
  write_json(out_dir / "metadata.json", metadata_json(meta, config));

  auto policy_file = [&](const VecX& weights) {
    PolicyFile f;
    f.weights = PolicyWeights(weights);
    f.input_scale = scale;
    f.seed = master;
    f.config_digest = digest;
    return f;
  };

  const Objective objective = [&](const VecX& w, const EvalContext& c) {
    const Controller ctl =
        Controller::learned(PolicyWeights(w), scale, config.controller.stochastic_actions);
    return run_episode(ctl, config.train_scenario, ctx, training_seeds(master, c.iteration, c.candidate))
        .cost;
  };

  HistoryWriter history(out_dir / "history.csv");
  MinimizeOptions options;
  options.epochs = config.cem.epochs;
  options.seed = master;
  options.threads = config.cem.threads;
  options.on_iteration = [&](const CemState& state, const VecX& best, double best_cost,
                             double wallclock) {
    const CemHistoryEntry& h = state.history.back();
    history.append(h, wallclock);
    spdlog::info("epoch {:4d}  best {:.6g}  mean {:.6g}  best-ever {:.6g}", h.iteration + 1,
                 h.best_cost, h.mean_cost, best_cost);
    if (config.cem.checkpoint_every > 0 && state.iteration % config.cem.checkpoint_every == 0 &&
        std::isfinite(best_cost)) {
      PolicyFile f = policy_file(best);
      f.has_search_state = true;
      f.search_mean = state.mean;
      f.search_variance = state.variance;
      f.iteration = state.iteration;
      save_policy((out_dir / fmt::format("checkpoint_epoch_{:04d}.json", state.iteration)).string(), f);
    }
  };

  const MinimizeResult result = minimize(objective, cem_config_for_policy(config.cem), options);
  if (!std::isfinite(result.best_cost)) {
    throw DivergenceError("every training episode diverged");
  }
  save_policy((out_dir / "best_weights.json").string(), policy_file(result.best_weights));

  return {PolicyWeights(result.best_weights), result.best_cost, result.state, out_dir};
}

EvalReport evaluate(const Config& config, const EvalRequest& request) {
  config.validate();
  ensure_dir(request.out_dir);

  const SimilarityBasis basis = make_basis(config.rng.basis_seed);
  const EpisodeContext ctx{config.vehicle, basis, config.controller};
  const std::size_t episodes = request.episodes.value_or(config.eval.episodes);
  if (episodes < 1) throw ConfigError("evaluation needs at least one episode");

  std::vector<Controller> controllers{Controller::naive()};
  if (request.policy) {
    controllers.push_back(Controller::learned(request.policy->weights, request.policy->input_scale,
                                              config.controller.stochastic_actions));
  }

  EvalReport report;
  for (ScenarioKind kind : request.scenarios) {
    const ScenarioSpec spec = config.eval.scenario(kind);
    for (const Controller& controller : controllers) {
      std::vector<EpisodeResult> results(episodes);
      parallel_for(episodes, config.cem.threads, [&](std::size_t e) {
        results[e] = run_episode(controller, spec, ctx, evaluation_seeds(config.rng.master_seed, kind, e));
      });

      const std::string stem =
          fmt::format("{}_{}", controller_name(controller.kind), scenario_name(kind));
      std::ofstream trace = open_output(request.out_dir / fmt::format("trace_{}.csv", stem));
      std::ofstream curve = open_output(request.out_dir / fmt::format("stability_{}.csv", stem));
      write_header(trace, trace_columns());
      write_header(curve, stability_columns());

      AggregateRow row;
      row.controller = controller_name(controller.kind);
      row.scenario = scenario_name(kind);
      row.episodes = episodes;
      std::vector<double> costs, state_pct, param_pct, constructive_pct, c4_pct;
      for (std::size_t e = 0; e < episodes; ++e) {
        const EpisodeResult& r = results[e];
        write_trace_rows(trace, e, r.records);
        write_stability_rows(curve, e, cumulative_stability(r.records));
        if (r.diverged) {
          ++row.diverged;
          spdlog::warn("{} episode {} diverged: {}", stem, e, r.failure);
        }
        costs.push_back(r.cost);
        const StabilityPercentages all = stability_percentages(r.records);
        state_pct.push_back(all.state_pct);
        param_pct.push_back(all.param_pct);
        constructive_pct.push_back(stability_percentages(r.records, kConstructiveConstraints).param_pct);
        c4_pct.push_back(
            stability_percentages(r.records, {false, false, false, true, false}).param_pct);
      }
      if (!trace || !curve) throw IoError(fmt::format("failed writing traces for {}", stem));

      const MeanStd j = finite_mean_std(costs), sp = finite_mean_std(state_pct),
                    pp = finite_mean_std(param_pct);
      row.cost_mean = j.mean;
      row.cost_std = j.stddev;
      row.state_pct_mean = sp.mean;
      row.state_pct_std = sp.stddev;
      row.param_pct_mean = pp.mean;
      row.param_pct_std = pp.stddev;
      row.param_constructive_pct_mean = finite_mean_std(constructive_pct).mean;
      row.constraint4_pct_mean = finite_mean_std(c4_pct).mean;
      report.rows.push_back(row);
    }
  }

  write_aggregate(request.out_dir / "aggregate.csv", report.rows);
  RunMetadata meta{config.rng.master_seed, config.digest(), config.rng.basis_seed, "", "",
                   code_version()};
  for (ScenarioKind k : request.scenarios) {
    meta.scenario += (meta.scenario.empty() ? "" : ",") + std::string(scenario_name(k));
  }
  meta.controller_id = request.policy ? "naive_pid,lb_pid" : "naive_pid";
  write_json(request.out_dir / "metadata.json", metadata_json(meta, config));
  plot_eval_dir(request.out_dir, request.out_dir);
  return report;
}

}  // namespace cempid
