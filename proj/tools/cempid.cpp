// cempid: train, evaluate and plot CEM-tuned PID controllers for a 6-DoF
// underwater vehicle.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric divergence,
// 4 I/O error, 1 anything else.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cempid/config.hpp"
#include "cempid/errors.hpp"
#include "cempid/harness.hpp"
#include "cempid/plot.hpp"
#include "cempid/policy.hpp"
#include "cempid/selftest.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

cempid::Config load_or_default(const std::string& path) {
  if (path.empty()) return cempid::Config{};
  return cempid::load_config(path);
}

int run_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out, std::optional<std::size_t> threads,
              std::optional<std::size_t> epochs) {
  cempid::Config config = cempid::load_config(config_path);
  if (seed) config.rng.master_seed = *seed;
  if (threads) config.cem.threads = *threads;
  if (epochs) config.cem.epochs = *epochs;
  const cempid::TrainArtifacts art = cempid::train(config, out);
  std::cout << "best episode cost " << art.best_cost << "; artifacts in " << art.out_dir.string()
            << "\n";
  return 0;
}

int run_eval(const std::string& config_path, const std::string& weights, bool naive,
             const std::vector<std::string>& scenarios, std::optional<std::size_t> episodes,
             std::optional<std::uint64_t> seed, std::optional<std::size_t> threads,
             const std::string& out) {
  cempid::Config config = load_or_default(config_path);
  if (seed) config.rng.master_seed = *seed;
  if (threads) config.cem.threads = *threads;

  cempid::EvalRequest req;
  req.out_dir = out;
  req.episodes = episodes;
  if (!naive) {
    req.policy = cempid::load_policy(weights);
    if (!req.policy->config_digest.empty() && req.policy->config_digest != config.digest()) {
      spdlog::warn("weights were trained under config {}, evaluating under {}",
                   req.policy->config_digest, config.digest());
    }
  }
  if (!scenarios.empty()) {
    req.scenarios.clear();
    for (const std::string& s : scenarios) req.scenarios.push_back(cempid::parse_scenario(s));
  }
  const cempid::EvalReport report = cempid::evaluate(config, req);
  for (const cempid::AggregateRow& r : report.rows) {
    std::cout << r.controller << " / " << r.scenario << ": J = " << r.cost_mean
              << ", state stable " << r.state_pct_mean << "%, params stable " << r.param_pct_mean
              << "%, diverged " << r.diverged << "/" << r.episodes << "\n";
  }
  return 0;
}

int run_check(const std::string& config_path) {
  const cempid::Config config = cempid::load_config(config_path);
  std::cout << "config OK (digest " << config.digest() << ")\n";
  bool all = true;
  for (const cempid::SelfTestResult& r : cempid::run_self_tests(config)) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    all = all && r.passed;
  }
  return all ? 0 : kExitDivergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CEM-trained Lyapunov-parametrized PID control for a 6-DoF underwater vehicle"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  std::string config_path, out, weights, in_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads, episodes, epochs;
  std::vector<std::string> scenarios;
  bool naive = false;

  CLI::App* train = app.add_subcommand("train", "train a policy with the cross-entropy method");
  train->add_option("--config", config_path, "JSON config file")->required();
  train->add_option("--seed", seed, "master seed (overrides rng.master_seed)");
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--threads", threads, "parallel episode workers");
  train->add_option("--epochs", epochs, "override cem.epochs");

  CLI::App* eval = app.add_subcommand("eval", "evaluate the baseline and optionally a policy");
  auto* w = eval->add_option("--weights", weights, "trained policy JSON");
  auto* n = eval->add_flag("--naive", naive, "evaluate only the baseline PID");
  w->excludes(n);
  n->excludes(w);
  eval->add_option("--scenario", scenarios, "none|sensor|actuator-current (repeatable)");
  eval->add_option("--episodes", episodes, "episodes per scenario and controller");
  eval->add_option("--config", config_path, "JSON config file (defaults when omitted)");
  eval->add_option("--seed", seed, "master seed (overrides rng.master_seed)");
  eval->add_option("--threads", threads, "parallel episode workers");
  eval->add_option("--out", out, "output directory")->required();

  CLI::App* plot = app.add_subcommand("plot", "render SVG plots from an eval directory");
  plot->add_option("--in", in_dir, "eval output directory")->required();
  plot->add_option("--out", out, "plot directory")->required();

  CLI::App* check = app.add_subcommand("check", "validate a config and run self-tests");
  check->add_option("--config", config_path, "JSON config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("cempid"));
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*train) return run_train(config_path, seed, out, threads, epochs);
    if (*eval) {
      if (weights.empty() && !naive) {
        std::cerr << "eval: pass --weights <file> or --naive\n";
        return kExitConfig;
      }
      return run_eval(config_path, weights, naive, scenarios, episodes, seed, threads, out);
    }
    if (*plot) {
      for (const auto& p : cempid::plot_eval_dir(in_dir, out)) std::cout << p.string() << "\n";
      return 0;
    }
    if (*check) return run_check(config_path);
  } catch (const cempid::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cempid::EmptyEliteError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cempid::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cempid::ShapeError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const cempid::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const cempid::SingularityError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const cempid::IllConditionedError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
