#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <json.hpp>

#include "cempid/errors.hpp"
#include "cempid/harness.hpp"
#include "cempid/report.hpp"
#include "oracles.hpp"

using namespace cempid;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Config config;
  SimilarityBasis basis = make_basis(1);
  EpisodeContext ctx{config.vehicle, basis, config.controller};
};

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("cempid_test_" + name);
  fs::remove_all(dir);
  return dir;
}

ScenarioSpec fixed_start(const Vec6& eta, std::size_t steps) {
  ScenarioSpec s;
  s.episode_steps = steps;
  s.init_pose_lo = s.init_pose_hi = eta;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config tiny_config() {
  Config c = parse_config(slurp(fs::path(CEMPID_CONFIG_DIR) / "smoke.json"));
  c.cem.epochs = 3;
  c.cem.checkpoint_every = 2;
  c.train_scenario.episode_steps = 20;
  c.eval.episodes = 2;
  c.eval.episode_steps = 30;
  return c;
}

}  // namespace

TEST(EpisodeCost, ZeroWhenOnSetpoint) {
  std::vector<StepRecord> records(5);
  EXPECT_EQ(episode_cost(records), 0.0);
}

TEST(EpisodeCost, MeanOfSixOnes) {
  StepRecord r;
  r.eta = Vec6::Ones();
  EXPECT_DOUBLE_EQ(episode_cost({r}), 1.0);
  EXPECT_DOUBLE_EQ(step_cost(Vec6::Ones(), Vec6::Zero()), 1.0);
}

TEST(EpisodeCost, MatchesResummation) {
  std::mt19937_64 rng(51);
  std::vector<StepRecord> records;
  std::vector<Vec6> etas;
  Vec6 eta_d;
  eta_d << 0.1, -0.2, 0.3, 0.0, 0.05, -0.1;
  for (int k = 0; k < 500; ++k) {
    StepRecord r;
    r.eta = oracle::random_pose(rng);
    records.push_back(r);
    etas.push_back(r.eta);
  }
  const double want = oracle::summed_cost(etas, eta_d);
  EXPECT_NEAR(episode_cost(records, eta_d), want, 1e-12 * want);
}

TEST(NaiveBaseline, StructureMatrixEntries) {
  const Mat6 m = naive_structure_matrix();
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) EXPECT_EQ(m(i, j), i == j ? 0.5 : 1e-5);
  }
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat6>(m).eigenvalues().minCoeff();
  EXPECT_NEAR(min_eig, 0.5 - 1e-5, 1e-12);
}

TEST(NaiveBaseline, ConstructiveConstraintsAtRandomPoses) {
  const VehicleModel m = default_vehicle_model();
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec6 eta = oracle::random_pose(rng), eta_d = oracle::random_pose(rng);
    const GainSet g = naive_gains(eta, eta_d, m, 1e-3);
    for (MatrixOrder order : {MatrixOrder::kSpectral, MatrixOrder::kLoewner}) {
      const ConstraintFlags f = check_param_constraints(g, eta, eta_d, m, order);
      EXPECT_TRUE(f[0] && f[1] && f[2] && f[4]);
    }
  }
}

TEST(NaiveBaseline, Deterministic) {
  const VehicleModel m = default_vehicle_model();
  Vec6 eta;
  eta << 1, 2, 3, 0.1, 0.2, 0.3;
  const GainSet a = naive_gains(eta, Vec6::Zero(), m, 1e-3);
  const GainSet b = naive_gains(eta, Vec6::Zero(), m, 1e-3);
  EXPECT_EQ(a.kp, b.kp);
  EXPECT_EQ(a.alpha, b.alpha);
}

TEST(RunEpisode, NaiveHoldsSetpoint) {
  Fixture f;
  const EpisodeResult r =
      run_episode(Controller::naive(), fixed_start(Vec6::Zero(), 200), f.ctx, EpisodeSeeds::from(1));
  EXPECT_FALSE(r.diverged);
  ASSERT_EQ(r.records.size(), 200u);
  EXPECT_LT(r.cost, 1e-6);
}

TEST(RunEpisode, DeterministicPerSeed) {
  Fixture f;
  const ScenarioSpec spec = f.config.eval.scenario(ScenarioKind::kActuatorNoiseWithCurrent);
  ScenarioSpec shorter = spec;
  shorter.episode_steps = 150;
  const Controller lb = Controller::learned(PolicyWeights{}, Vec18::Ones(), true);
  for (const Controller& c : {Controller::naive(), lb}) {
    const EpisodeResult a = run_episode(c, shorter, f.ctx, EpisodeSeeds::from(9));
    const EpisodeResult b = run_episode(c, shorter, f.ctx, EpisodeSeeds::from(9));
    std::ostringstream ta, tb;
    write_trace_rows(ta, 0, a.records);
    write_trace_rows(tb, 0, b.records);
    EXPECT_EQ(ta.str(), tb.str());
    EXPECT_EQ(a.cost, b.cost);
  }
}

TEST(RunEpisode, CostIsSumOfRecordedStepCosts) {
  Fixture f;
  Vec6 start;
  start << 1.0, -1.0, 0.5, 0.1, -0.1, 0.2;
  const EpisodeResult r =
      run_episode(Controller::naive(), fixed_start(start, 300), f.ctx, EpisodeSeeds::from(2));
  double sum = 0.0;
  for (const StepRecord& s : r.records) sum += s.cost;
  EXPECT_DOUBLE_EQ(r.cost, sum);
  EXPECT_DOUBLE_EQ(r.cost, episode_cost(r.records));
  EXPECT_FALSE(r.records.front().state_counted);
  EXPECT_TRUE(r.records.back().state_counted);
}

TEST(RunEpisode, SensorNoiseLeavesPlantUntouched) {
  Fixture f;
  Vec6 start;
  start << 1.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  ScenarioSpec clean = fixed_start(start, 10);
  ScenarioSpec noisy = clean;
  noisy.sensor_noise_std = Vec6::Constant(0.3);
  const EpisodeResult a = run_episode(Controller::naive(), clean, f.ctx, EpisodeSeeds::from(3));
  const EpisodeResult b = run_episode(Controller::naive(), noisy, f.ctx, EpisodeSeeds::from(3));
  // Recorded pose is the true one: identical at step 0, commands differ.
  EXPECT_EQ(a.records[0].eta, b.records[0].eta);
  EXPECT_NE(a.records[0].u, b.records[0].u);
  EXPECT_EQ(b.records[0].actuator_noise, Vec6::Zero());
}

TEST(RunEpisode, ActuatorNoiseIsRecordedSeparately) {
  Fixture f;
  Vec6 start;
  start << 1.0, 0.5, 0.0, 0.0, 0.0, 0.0;
  ScenarioSpec clean = fixed_start(start, 10);
  ScenarioSpec noisy = clean;
  noisy.actuator_noise_std = Vec6::Constant(50.0);
  const EpisodeResult a = run_episode(Controller::naive(), clean, f.ctx, EpisodeSeeds::from(4));
  const EpisodeResult b = run_episode(Controller::naive(), noisy, f.ctx, EpisodeSeeds::from(4));
  EXPECT_EQ(a.records[0].u, b.records[0].u);
  EXPECT_NE(b.records[0].actuator_noise, Vec6::Zero());
  EXPECT_NE(a.records[1].eta, b.records[1].eta);
  // The noisy plant saw u + noise: replay one step by hand.
  SimState s;
  s.eta = start;
  const SimState next = step_dynamics(s, b.records[0].u + b.records[0].actuator_noise, {},
                                      Vec6::Zero(), f.config.controller.control_period_s,
                                      f.config.vehicle);
  EXPECT_EQ(next.eta, b.records[1].eta);
}

TEST(RunEpisode, SaturationIsFlagged) {
  Fixture f;
  f.config.controller.u_max = 10.0;
  const EpisodeContext ctx{f.config.vehicle, f.basis, f.config.controller};
  Vec6 start;
  start << 2.0, 0.0, 0.0, 0.0, 0.0, 0.0;
  const EpisodeResult r = run_episode(Controller::naive(), fixed_start(start, 5), ctx,
                                      EpisodeSeeds::from(5));
  EXPECT_TRUE(r.records[0].saturated);
  EXPECT_LE(r.records[0].u.cwiseAbs().maxCoeff(), 10.0);
}

TEST(RunEpisode, DivergenceTruncatesAndScoresInfinite) {
  Fixture f;
  f.config.controller.control_period_s = 5.0;
  const EpisodeContext ctx{f.config.vehicle, f.basis, f.config.controller};
  const Controller wild = [] {
    PolicyLayers l = PolicyLayers::unpack(PolicyWeights{});
    l.b3.head<18>().setConstant(60.0);
    return Controller::learned(l.pack(), Vec18::Ones(), false);
  }();
  Vec6 start;
  start << 2.0, 2.0, 2.0, 0.3, 0.3, 1.0;
  const EpisodeResult r = run_episode(wild, fixed_start(start, 500), ctx, EpisodeSeeds::from(6));
  EXPECT_TRUE(r.diverged);
  EXPECT_LT(r.records.size(), 500u);
  EXPECT_TRUE(std::isinf(r.cost));
  EXPECT_FALSE(r.failure.empty());
}

TEST(RunEpisode, LearnedControllerNeedsWeights) {
  Fixture f;
  Controller c;
  c.kind = ControllerKind::kLbPid;
  EXPECT_THROW(run_episode(c, fixed_start(Vec6::Zero(), 3), f.ctx, EpisodeSeeds::from(1)),
               Error);
}

TEST(InitialState, WithinBoundsAndDeterministic) {
  const ScenarioSpec spec = EvalSettings{}.scenario(ScenarioKind::kNone);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const SimState s = initial_state(spec, seed);
    EXPECT_TRUE((s.eta.array() >= spec.init_pose_lo.array()).all());
    EXPECT_TRUE((s.eta.array() <= spec.init_pose_hi.array()).all());
    EXPECT_EQ(s.nu, Vec6::Zero());
    EXPECT_EQ(initial_state(spec, seed).eta, s.eta);
  }
}

TEST(Seeds, TrainingPoseSharedWithinIteration) {
  const EpisodeSeeds a = training_seeds(7, 3, 0), b = training_seeds(7, 3, 1);
  EXPECT_EQ(a.init_pose, b.init_pose);
  EXPECT_NE(a.sensor, b.sensor);
  EXPECT_NE(a.policy, b.policy);
  EXPECT_NE(training_seeds(7, 4, 0).init_pose, a.init_pose);
  EXPECT_NE(training_seeds(8, 3, 0).init_pose, a.init_pose);
}

TEST(Seeds, EvaluationStreamsDifferByEpisodeAndScenario) {
  const EpisodeSeeds a = evaluation_seeds(1, ScenarioKind::kNone, 0);
  EXPECT_NE(a.init_pose, evaluation_seeds(1, ScenarioKind::kNone, 1).init_pose);
  EXPECT_NE(a.init_pose, evaluation_seeds(1, ScenarioKind::kSensorNoise, 0).init_pose);
  EXPECT_NE(a.init_pose, a.sensor);
}

TEST(Stability, AllFlagsTrue) {
  std::vector<StepRecord> records(10);
  for (std::size_t k = 0; k < records.size(); ++k) {
    records[k].state_counted = k > 0;
    records[k].state_stable = true;
    records[k].param_flags = {true, true, true, true, true};
  }
  const StabilityPercentages p = stability_percentages(records);
  EXPECT_EQ(p.state_pct, 100.0);
  EXPECT_EQ(p.param_pct, 100.0);
}

TEST(Stability, AlternatingStateIsHalf) {
  std::vector<StepRecord> records(2002);
  for (std::size_t k = 1; k < records.size(); ++k) {
    records[k].state_counted = true;
    records[k].state_stable = (k % 2) == 0;
  }
  EXPECT_NEAR(stability_percentages(records).state_pct, 50.0, 0.05);
  EXPECT_EQ(stability_percentages(records).param_pct, 0.0);
}

TEST(Stability, NothingCountedIsNaN) {
  std::vector<StepRecord> records(3);
  EXPECT_TRUE(std::isnan(stability_percentages(records).state_pct));
}

TEST(Stability, MaskSelectsConstraints) {
  std::vector<StepRecord> records(4);
  for (StepRecord& r : records) r.param_flags = {true, true, true, false, true};
  EXPECT_EQ(stability_percentages(records).param_pct, 0.0);
  EXPECT_EQ(stability_percentages(records, kConstructiveConstraints).param_pct, 100.0);
}

TEST(Stability, CumulativeCurveMatchesPrefixes) {
  Fixture f;
  Vec6 start;
  start << 1.0, -1.0, 0.5, 0.1, -0.1, 0.2;
  ScenarioSpec spec = fixed_start(start, 120);
  spec.sensor_noise_std = Vec6::Constant(0.05);
  const EpisodeResult r = run_episode(Controller::naive(), spec, f.ctx, EpisodeSeeds::from(8));
  const auto curve = cumulative_stability(r.records);
  ASSERT_EQ(curve.size(), r.records.size());
  for (std::size_t k = 0; k < curve.size(); k += 7) {
    const std::vector<StepRecord> prefix(r.records.begin(), r.records.begin() + k + 1);
    const StabilityPercentages p = stability_percentages(prefix);
    EXPECT_TRUE(p.state_pct == curve[k].state_pct ||
                (std::isnan(p.state_pct) && std::isnan(curve[k].state_pct)));
    EXPECT_EQ(p.param_pct, curve[k].param_pct);
  }
}

TEST(Stability, NaiveConstructiveSetAlwaysHolds) {
  Fixture f;
  const ScenarioSpec spec = [&] {
    ScenarioSpec s = f.config.eval.scenario(ScenarioKind::kNone);
    s.episode_steps = 400;
    return s;
  }();
  for (std::uint64_t seed : {1, 2, 3}) {
    const EpisodeResult r = run_episode(Controller::naive(), spec, f.ctx, EpisodeSeeds::from(seed));
    EXPECT_EQ(stability_percentages(r.records, kConstructiveConstraints).param_pct, 100.0);
  }
}

TEST(Train, WritesArtifacts) {
  const fs::path dir = fresh_dir("train");
  const Config c = tiny_config();
  const TrainArtifacts art = train(c, dir);
  EXPECT_TRUE(std::isfinite(art.best_cost));
  EXPECT_EQ(art.final_state.iteration, 3u);
  EXPECT_TRUE(fs::exists(dir / "best_weights.json"));
  EXPECT_TRUE(fs::exists(dir / "checkpoint_epoch_0002.json"));
  EXPECT_FALSE(fs::exists(dir / "checkpoint_epoch_0003.json"));

  const CsvTable h = read_csv(dir / "history.csv");
  EXPECT_EQ(h.header, history_columns());
  EXPECT_EQ(h.rows.size(), 3u);
  EXPECT_EQ(h.rows[0][0], "1");

  const PolicyFile best = load_policy((dir / "best_weights.json").string());
  EXPECT_EQ(best.config_digest, c.digest());
  EXPECT_EQ(best.weights.flat(), art.best_weights.flat());
  const PolicyFile ck = load_policy((dir / "checkpoint_epoch_0002.json").string());
  EXPECT_TRUE(ck.has_search_state);
  EXPECT_EQ(ck.iteration, 2u);

  const auto meta = nlohmann::json::parse(slurp(dir / "metadata.json"));
  for (const char* key : {"master_seed", "config_digest", "basis_seed", "scenario",
                          "controller_id", "code_version"}) {
    EXPECT_TRUE(meta.contains(key)) << key;
  }
  EXPECT_EQ(meta["controller_id"], "lb_pid");
  fs::remove_all(dir);
}

TEST(Train, SameSeedSameHistory) {
  const Config c = tiny_config();
  const fs::path a = fresh_dir("train_a"), b = fresh_dir("train_b");
  train(c, a);
  train(c, b);
  const CsvTable ha = read_csv(a / "history.csv"), hb = read_csv(b / "history.csv");
  for (std::size_t r = 0; r < ha.rows.size(); ++r) {
    for (std::size_t col = 0; col + 1 < ha.header.size(); ++col) {
      EXPECT_EQ(ha.rows[r][col], hb.rows[r][col]);
    }
  }
  EXPECT_EQ(slurp(a / "best_weights.json"), slurp(b / "best_weights.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Evaluate, BothControllersAndAllScenarios) {
  const fs::path dir = fresh_dir("eval");
  const Config c = tiny_config();
  EvalRequest req;
  req.out_dir = dir;
  PolicyFile p;
  p.input_scale = c.controller.resolved_input_scale(c.vehicle);
  req.policy = p;
  const EvalReport report = evaluate(c, req);
  ASSERT_EQ(report.rows.size(), 6u);

  const CsvTable agg = read_csv(dir / "aggregate.csv");
  EXPECT_EQ(agg.header, aggregate_columns());
  ASSERT_EQ(agg.rows.size(), 6u);
  bool naive = false, lb = false;
  for (const auto& row : agg.rows) {
    naive = naive || row[0] == "naive_pid";
    lb = lb || row[0] == "lb_pid";
  }
  EXPECT_TRUE(naive && lb);

  for (const char* scen : {"none", "sensor", "actuator-current"}) {
    for (const char* ctl : {"naive_pid", "lb_pid"}) {
      const CsvTable t = read_csv(dir / ("trace_" + std::string(ctl) + "_" + scen + ".csv"));
      EXPECT_EQ(t.header, trace_columns());
      EXPECT_TRUE(fs::exists(dir / ("stability_" + std::string(ctl) + "_" + scen + ".csv")));
    }
    EXPECT_TRUE(fs::exists(dir / ("mse_" + std::string(scen) + ".svg")));
    EXPECT_TRUE(fs::exists(dir / ("stability_" + std::string(scen) + ".svg")));
  }
  fs::remove_all(dir);
}

TEST(Evaluate, NaiveOnlyAndEpisodeOverride) {
  const fs::path dir = fresh_dir("eval_naive");
  EvalRequest req;
  req.out_dir = dir;
  req.scenarios = {ScenarioKind::kSensorNoise};
  req.episodes = 3;
  const EvalReport report = evaluate(tiny_config(), req);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].controller, "naive_pid");
  EXPECT_EQ(report.rows[0].episodes, 3u);
  const CsvTable t = read_csv(dir / "trace_naive_pid_sensor.csv");
  EXPECT_EQ(t.rows.size(), 3u * 30u);
  fs::remove_all(dir);
}
