#pragma once

// Stochastic gain policy: 18 -> 32 -> 32 -> 38 feedforward network with
// sigmoid hidden layers. The 38 outputs are 19 (mu, sigma) pairs, one per
// entry of the LambdaAction, each read through a softplus head.

#include <cstddef>
#include <cstdint>
#include <string>

#include <cempid/lyapunov.hpp>
#include <cempid/rng.hpp>
#include <cempid/types.hpp>

namespace cempid {

struct PolicyArchitecture {
  static constexpr std::size_t kInputs = 18;
  static constexpr std::size_t kHidden1 = 32;
  static constexpr std::size_t kHidden2 = 32;
  static constexpr std::size_t kActions = 19;
  static constexpr std::size_t kOutputs = 2 * kActions;

  static constexpr std::size_t kLayer1 = (kInputs + 1) * kHidden1;
  static constexpr std::size_t kLayer2 = (kHidden1 + 1) * kHidden2;
  static constexpr std::size_t kOutputLayer = (kHidden2 + 1) * kOutputs;
  static constexpr std::size_t kParameterCount = kLayer1 + kLayer2 + kOutputLayer;
};

static_assert(PolicyArchitecture::kParameterCount == 2918);

inline constexpr double kSigmaMin = 1e-4;
inline constexpr double kActionFloor = 1e-6;

/// Flat network parameters. Layout per layer: weights stored (in x out)
/// row-major, followed by the out biases; layers in forward order.
class PolicyWeights {
 public:
  PolicyWeights() : flat_(VecX::Zero(PolicyArchitecture::kParameterCount)) {}
  /// Throws ShapeError unless flat has exactly kParameterCount entries, and
  /// Error when any entry is non-finite.
  explicit PolicyWeights(VecX flat);

  const VecX& flat() const { return flat_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

 private:
  VecX flat_;
};

/// Layered view of PolicyWeights, W_l with shape (outputs x inputs).
struct PolicyLayers {
  Eigen::MatrixXd w1, w2, w3;
  VecX b1, b2, b3;

  static PolicyLayers unpack(const PolicyWeights& weights);
  PolicyWeights pack() const;
};

struct ActionDistribution {
  Vec19 mu = Vec19::Zero();
  Vec19 sigma = Vec19::Constant(kSigmaMin);
};

double softplus(double x);
double sigmoid(double x);

/// Input x must already be normalized (see normalize_input).
ActionDistribution forward(const PolicyWeights& weights, const Vec18& x);

/// Elementwise x / scale.
Vec18 normalize_input(const Vec18& x, const Vec18& scale);

/// Default normalization: p_i by the diagonal of the total mass, eta by 10,
/// integral of error by 100.
Vec18 default_input_scale(const Mat6& total_mass);

/// 19 independent N(mu, sigma^2) draws, floored at kActionFloor.
LambdaAction sample_action(const ActionDistribution& dist, RngStream& rng);

/// Floored mean action.
LambdaAction deterministic_action(const ActionDistribution& dist);

/// Per-file metadata stored next to the flat weights.
struct PolicyFile {
  PolicyWeights weights;
  Vec18 input_scale = Vec18::Ones();
  std::uint64_t seed = 0;
  std::string config_digest;
  /// Present in optimizer checkpoints only.
  bool has_search_state = false;
  VecX search_mean;
  VecX search_variance;
  std::size_t iteration = 0;
};

/// Throws IoError on file failures and ShapeError on architecture mismatch.
void save_policy(const std::string& path, const PolicyFile& file);
PolicyFile load_policy(const std::string& path);

}  // namespace cempid
