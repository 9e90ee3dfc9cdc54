#include "cempid/selftest.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cempid/harness.hpp"
#include "cempid/lyapunov.hpp"
#include "cempid/policy.hpp"
#include "cempid/rng.hpp"
#include "cempid/vehicle.hpp"

namespace cempid {

namespace {

constexpr int kSamples = 200;

Vec6 random_pose(RngStream& rng) {
  Vec6 eta;
  for (int i = 0; i < 3; ++i) eta(i) = rng.uniform(-5.0, 5.0);
  eta(kRoll) = rng.uniform(-0.8, 0.8);
  eta(kPitch) = rng.uniform(-1.2, 1.2);
  eta(kYaw) = rng.uniform(-3.1, 3.1);
  return eta;
}

template <typename Fn>
SelfTestResult guarded(const std::string& name, Fn&& fn) {
  SelfTestResult r{name, false, {}};
  try {
    r.detail = fn(r.passed);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = e.what();
  }
  return r;
}

}  // namespace

std::vector<SelfTestResult> run_self_tests(const Config& config) {
  const VehicleModel& model = config.vehicle;
  RngStream rng(config.rng.master_seed, StreamPurpose::kSelfTest);
  std::vector<SelfTestResult> out;

  out.push_back(guarded("rotation block orthonormal", [&](bool& ok) {
    double worst = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const Mat6 j = kinematic_transform(random_pose(rng));
      const Mat3 r = j.topLeftCorner<3, 3>();
      worst = std::max(worst, (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
    }
    ok = worst < 1e-12;
    return fmt::format("max |R^T R - I| = {:.3g}", worst);
  }));

  out.push_back(guarded("M_eta symmetric positive definite", [&](bool& ok) {
    double min_eig = std::numeric_limits<double>::infinity();
    double asym = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      const Mat6 m = m_eta(random_pose(rng), model);
      asym = std::max(asym, (m - m.transpose()).cwiseAbs().maxCoeff());
      min_eig = std::min(min_eig, Eigen::SelfAdjointEigenSolver<Mat6>(m).eigenvalues().minCoeff());
    }
    ok = asym == 0.0 && min_eig > 0.0;
    return fmt::format("min eigenvalue {:.6g}, asymmetry {:.3g}", min_eig, asym);
  }));

  out.push_back(guarded("Coriolis power vanishes", [&](bool& ok) {
    double worst = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      Vec6 nu;
      for (double& v : nu) v = rng.uniform(-2.0, 2.0);
      const Mat6 c = coriolis_matrix(model.total_mass(), nu);
      const double scale = 1.0 + nu.squaredNorm() * model.total_mass().cwiseAbs().maxCoeff();
      worst = std::max(worst, std::abs(nu.dot(c * nu)) / scale);
    }
    ok = worst < 1e-12;
    return fmt::format("max relative |nu^T C nu| = {:.3g}", worst);
  }));

  out.push_back(guarded("similarity basis inverse", [&](bool& ok) {
    const SimilarityBasis b = make_basis(config.rng.basis_seed);
    const double err = (b.p() * b.p_inv() - Mat6::Identity()).cwiseAbs().maxCoeff();
    ok = err < 1e-8;
    return fmt::format("|P P^-1 - I| = {:.3g}, cond {:.4g}", err, b.condition_number());
  }));

  out.push_back(guarded("constraints 1,2,3,5 hold by construction", [&](bool& ok) {
    const SimilarityBasis b = make_basis(config.rng.basis_seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 0; s < kSamples; ++s) {
      Vec19 v;
      for (double& x : v) x = std::pow(10.0, rng.uniform(-3.0, 3.0));
      const Vec6 eta = random_pose(rng);
      const GainSet g = gains_from_lambda(LambdaAction::from_flat(v), b, eta,
                                          config.controller.setpoint, model);
      const ConstraintMargins m = constraint_margins(g, eta, config.controller.setpoint, model);
      for (int c : {0, 1, 2, 4}) worst = std::min(worst, m.margin[c]);
    }
    ok = worst > -1e-8;
    return fmt::format("smallest margin {:.6g}", worst);
  }));

  out.push_back(guarded("policy parameter count", [&](bool& ok) {
    const ActionDistribution d = forward(PolicyWeights{}, Vec18::Zero());
    ok = PolicyArchitecture::kParameterCount == 2918 &&
         std::abs(d.mu(0) - std::log(2.0)) < 1e-12;
    return fmt::format("{} parameters", PolicyArchitecture::kParameterCount);
  }));

  out.push_back(guarded("baseline holds the setpoint", [&](bool& ok) {
    const SimilarityBasis b = make_basis(config.rng.basis_seed);
    ScenarioSpec spec;
    spec.episode_steps = 50;
    spec.init_pose_lo = spec.init_pose_hi = config.controller.setpoint;
    const EpisodeResult r =
        run_episode(Controller::naive(), spec, {model, b, config.controller}, EpisodeSeeds::from(0));
    ok = !r.diverged && r.cost < 1e-6;
    return fmt::format("J = {:.3g} over {} steps", r.cost, r.records.size());
  }));

  return out;
}

}  // namespace cempid
