#include "cempid/cem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "cempid/errors.hpp"
#include "cempid/parallel.hpp"

namespace cempid {

std::size_t CemConfig::elite_count() const {
  // Guard against 25 * 0.2 landing a hair under 5.
  return static_cast<std::size_t>(
      std::floor(static_cast<double>(population_N) * elite_fraction_rho + 1e-9));
}

void CemConfig::validate() const {
  if (population_N == 0) throw ConfigError("cem population must be >= 1");
  if (!(elite_fraction_rho > 0.0 && elite_fraction_rho <= 1.0)) {
    throw ConfigError("cem elite fraction must lie in (0, 1]");
  }
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw ConfigError("cem noise variance must be finite and >= 0");
  }
  if (!(init_var > 0.0) || !std::isfinite(init_var)) {
    throw ConfigError("cem initial variance must be finite and > 0");
  }
  if (init_mean.size() == 0 || !init_mean.allFinite()) {
    throw ConfigError("cem initial mean must be non-empty and finite");
  }
  if (elite_count() == 0) {
    throw EmptyEliteError(fmt::format("floor({} * {}) elites is empty", population_N,
                                      elite_fraction_rho));
  }
}

CemState CemState::initial(const CemConfig& config) {
  CemState s;
  s.mean = config.init_mean;
  s.variance = VecX::Constant(config.init_mean.size(), config.init_var);
  return s;
}

std::vector<VecX> sample_population(const CemState& state, std::size_t n, RngStream& rng) {
  const VecX stddev = state.variance.cwiseSqrt();
  std::vector<VecX> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    VecX w(state.mean.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = state.mean(i) + stddev(i) * rng.normal();
    out.push_back(std::move(w));
  }
  return out;
}

std::size_t sanitize_costs(std::vector<double>& costs) {
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t bad = 0;
  for (double c : costs) {
    if (std::isfinite(c)) {
      worst = std::max(worst, c);
    } else {
      ++bad;
    }
  }
  if (bad == 0) return 0;
  if (!std::isfinite(worst)) worst = 0.0;
  for (double& c : costs) {
    if (!std::isfinite(c)) c = worst + 1.0;
  }
  return bad;
}

std::vector<std::size_t> select_elites(std::vector<double> costs, std::size_t elite_count) {
  sanitize_costs(costs);
  std::vector<std::size_t> order(costs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return costs[a] < costs[b]; });
  order.resize(std::min(elite_count, order.size()));
  return order;
}

CemState cem_update(const CemState& state, const std::vector<ScoredCandidate>& scored,
                    const CemConfig& config) {
  const std::size_t n_elite = config.elite_count();
  if (n_elite == 0) throw EmptyEliteError("elite set is empty");
  if (scored.size() < n_elite) throw Error("fewer scored candidates than elites");

  std::vector<double> costs;
  costs.reserve(scored.size());
  for (const auto& s : scored) costs.push_back(s.cost);
  const bool any_finite =
      std::any_of(costs.begin(), costs.end(), [](double c) { return std::isfinite(c); });
  if (const std::size_t bad = sanitize_costs(costs); bad > 0) {
    spdlog::debug("cem iteration {}: {} non-finite cost(s) ranked as worst + 1",
                 state.iteration, bad);
  }
  const std::vector<std::size_t> elites = select_elites(costs, n_elite);

  const Eigen::Index dim = state.mean.size();
  VecX mean = VecX::Zero(dim);
  for (std::size_t idx : elites) mean += scored[idx].weights;
  mean /= static_cast<double>(n_elite);

  VecX var = VecX::Zero(dim);
  for (std::size_t idx : elites) var += (scored[idx].weights - mean).cwiseAbs2();
  var /= static_cast<double>(n_elite);
  var.array() += config.noise_var;

  CemHistoryEntry h;
  h.iteration = state.iteration;
  h.best_cost = costs[elites.front()];
  h.mean_cost = std::accumulate(costs.begin(), costs.end(), 0.0) /
                static_cast<double>(costs.size());
  double elite_sum = 0.0;
  for (std::size_t idx : elites) elite_sum += costs[idx];
  h.elite_mean_cost = elite_sum / static_cast<double>(n_elite);
  if (!any_finite) {
    // Nothing to rank against; keep the history honest about it.
    h.best_cost = h.mean_cost = h.elite_mean_cost = std::numeric_limits<double>::infinity();
  }
  h.best_ever_cost = state.history.empty()
                         ? h.best_cost
                         : std::min(state.history.back().best_ever_cost, h.best_cost);

  CemState next;
  next.mean = std::move(mean);
  next.variance = std::move(var);
  next.iteration = state.iteration + 1;
  next.history = state.history;
  next.history.push_back(h);
  return next;
}

namespace {

std::vector<double> evaluate_all(const Objective& objective, const std::vector<VecX>& pop,
                                 std::size_t iteration, std::size_t threads) {
  std::vector<double> costs(pop.size(), 0.0);
  parallel_for(pop.size(), threads,
               [&](std::size_t k) { costs[k] = objective(pop[k], {iteration, k}); });
  return costs;
}

}  // namespace

MinimizeResult minimize(const Objective& objective, const CemConfig& config,
                        const MinimizeOptions& options) {
  config.validate();
  if (options.epochs < 1) throw ConfigError("minimize needs at least one epoch");

  MinimizeResult result;
  result.state = options.resume ? *options.resume : CemState::initial(config);
  result.best_cost = std::numeric_limits<double>::infinity();
  result.best_weights = result.state.mean;

  const auto start = std::chrono::steady_clock::now();
  const std::size_t first = result.state.iteration;
  for (std::size_t it = first; it < first + options.epochs; ++it) {
    RngStream rng(options.seed, StreamPurpose::kPopulation, {it});
    std::vector<VecX> pop = sample_population(result.state, config.population_N, rng);
    std::vector<double> costs = evaluate_all(objective, pop, it, options.threads);

    for (std::size_t k = 0; k < pop.size(); ++k) {
      if (std::isfinite(costs[k]) && costs[k] < result.best_cost) {
        result.best_cost = costs[k];
        result.best_weights = pop[k];
      }
    }

    std::vector<ScoredCandidate> scored;
    scored.reserve(pop.size());
    for (std::size_t k = 0; k < pop.size(); ++k) scored.push_back({std::move(pop[k]), costs[k]});
    result.state = cem_update(result.state, scored, config);

    if (options.on_iteration) {
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      options.on_iteration(result.state, result.best_weights, result.best_cost, elapsed);
    }
  }
  return result;
}

}  // namespace cempid
