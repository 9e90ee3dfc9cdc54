#include <benchmark/benchmark.h>

#include "cempid/harness.hpp"
#include "cempid/lyapunov.hpp"
#include "cempid/policy.hpp"
#include "cempid/vehicle.hpp"

using namespace cempid;

namespace {

Vec6 sample_pose() {
  Vec6 eta;
  eta << 0.8, -0.4, 0.3, 0.1, -0.2, 0.7;
  return eta;
}

void BM_PolicyForward(benchmark::State& state) {
  const PolicyWeights w(VecX::Constant(PolicyArchitecture::kParameterCount, 0.01));
  const Vec18 x = Vec18::LinSpaced(-1.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(forward(w, x));
}
BENCHMARK(BM_PolicyForward);

void BM_GainsFromLambda(benchmark::State& state) {
  const VehicleModel model = default_vehicle_model();
  const SimilarityBasis basis = make_basis(1);
  const LambdaAction a;
  const Vec6 eta = sample_pose();
  for (auto _ : state) benchmark::DoNotOptimize(gains_from_lambda(a, basis, eta, Vec6::Zero(), model));
}
BENCHMARK(BM_GainsFromLambda);

void BM_StepDynamics(benchmark::State& state) {
  const VehicleModel model = default_vehicle_model();
  SimState s;
  s.eta = sample_pose();
  s.nu << 0.2, 0.1, -0.1, 0.01, 0.02, 0.03;
  const Vec6 u = Vec6::Constant(10.0);
  for (auto _ : state) benchmark::DoNotOptimize(step_dynamics(s, u, {}, Vec6::Zero(), 0.05, model));
}
BENCHMARK(BM_StepDynamics);

void BM_NaiveEpisode(benchmark::State& state) {
  const Config config;
  const SimilarityBasis basis = make_basis(config.rng.basis_seed);
  const EpisodeContext ctx{config.vehicle, basis, config.controller};
  ScenarioSpec spec = config.eval.scenario(ScenarioKind::kNone);
  spec.episode_steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_episode(Controller::naive(), spec, ctx, EpisodeSeeds::from(1)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NaiveEpisode)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_LearnedEpisode(benchmark::State& state) {
  const Config config;
  const SimilarityBasis basis = make_basis(config.rng.basis_seed);
  const EpisodeContext ctx{config.vehicle, basis, config.controller};
  ScenarioSpec spec = config.train_scenario;
  const Controller c = Controller::learned(PolicyWeights{}, config.controller.resolved_input_scale(config.vehicle), true);
  for (auto _ : state) benchmark::DoNotOptimize(run_episode(c, spec, ctx, EpisodeSeeds::from(2)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(spec.episode_steps));
}
BENCHMARK(BM_LearnedEpisode)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
