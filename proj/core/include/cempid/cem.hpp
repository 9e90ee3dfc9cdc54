#pragma once

// Cross-Entropy Method over a diagonal Gaussian search distribution.
//
// Each iteration samples N candidates, keeps the floor(N * rho) lowest-cost
// ones, and refits mean and per-coordinate variance to that elite set. A
// fixed noise variance is added after every refit.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <cempid/rng.hpp>
#include <cempid/types.hpp>

namespace cempid {

struct CemConfig {
  std::size_t population_N = 25;
  double elite_fraction_rho = 0.2;
  double noise_var = 0.1;
  /// Dimension of the search space is init_mean.size().
  VecX init_mean;
  double init_var = 1.0;

  std::size_t elite_count() const;
  /// Throws ConfigError on invalid settings, EmptyEliteError when
  /// floor(N * rho) == 0.
  void validate() const;
};

struct CemHistoryEntry {
  std::size_t iteration = 0;
  double best_cost = 0.0;
  double mean_cost = 0.0;
  double elite_mean_cost = 0.0;
  /// Best cost seen over all iterations so far.
  double best_ever_cost = 0.0;
};

struct CemState {
  VecX mean;
  VecX variance;
  std::size_t iteration = 0;
  std::vector<CemHistoryEntry> history;

  static CemState initial(const CemConfig& config);
};

struct ScoredCandidate {
  VecX weights;
  double cost = 0.0;
};

/// Candidate-major draws: candidate k, coordinate i ~ N(mean_i, variance_i).
std::vector<VecX> sample_population(const CemState& state, std::size_t n,
                                    RngStream& rng);

/// Indices of the elite candidates, ordered by (cost, index). Non-finite
/// costs rank as worst-finite + 1.
std::vector<std::size_t> select_elites(std::vector<double> costs, std::size_t elite_count);

/// Replaces NaN and infinite costs with (worst finite cost + 1); returns the
/// number of replaced entries.
std::size_t sanitize_costs(std::vector<double>& costs);

CemState cem_update(const CemState& state, const std::vector<ScoredCandidate>& scored,
                    const CemConfig& config);

/// Identifies one objective evaluation for RNG stream derivation.
struct EvalContext {
  std::size_t iteration = 0;
  std::size_t candidate = 0;
};

using Objective = std::function<double(const VecX& weights, const EvalContext& ctx)>;

/// Called after each completed iteration with the updated state.
using IterationCallback = std::function<void(const CemState& state, const VecX& best_ever,
                                             double best_ever_cost, double wallclock_s)>;

struct MinimizeOptions {
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  /// Worker threads evaluating candidates. Results do not depend on it.
  std::size_t threads = 1;
  IterationCallback on_iteration;
  /// Resume from this state instead of CemState::initial.
  std::optional<CemState> resume;
};

struct MinimizeResult {
  VecX best_weights;
  double best_cost = 0.0;
  CemState state;
};

/// Runs epochs iterations of sample, evaluate, refit. The objective may be
/// called concurrently from several threads. Exceptions thrown by the
/// objective propagate after the iteration's outstanding evaluations finish.
MinimizeResult minimize(const Objective& objective, const CemConfig& config,
                        const MinimizeOptions& options);

}  // namespace cempid
