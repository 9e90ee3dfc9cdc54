#include "cempid/policy.hpp"

#include <cmath>
#include <fstream>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "cempid/errors.hpp"

namespace cempid {

namespace {

using Arch = PolicyArchitecture;
using json = nlohmann::json;

template <int In, int Out>
using LayerMap = Eigen::Map<const Eigen::Matrix<double, In, Out, Eigen::RowMajor>>;

std::vector<double> to_vector(const VecX& v) { return {v.data(), v.data() + v.size()}; }

VecX to_vecx(const json& j, const char* what) {
  if (!j.is_array()) throw IoError(fmt::format("policy file: '{}' is not an array", what));
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw IoError(fmt::format("policy file: non-numeric '{}'", what));
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

}  // namespace

PolicyWeights::PolicyWeights(VecX flat) : flat_(std::move(flat)) {
  if (static_cast<std::size_t>(flat_.size()) != Arch::kParameterCount) {
    throw ShapeError(fmt::format("policy expects {} weights, got {}",
                                 Arch::kParameterCount, flat_.size()));
  }
  if (!flat_.allFinite()) throw Error("policy weights must be finite");
}

PolicyLayers PolicyLayers::unpack(const PolicyWeights& weights) {
  const double* d = weights.flat().data();
  PolicyLayers l;
  l.w1 = LayerMap<Arch::kInputs, Arch::kHidden1>(d).transpose();
  d += Arch::kInputs * Arch::kHidden1;
  l.b1 = Eigen::Map<const VecX>(d, Arch::kHidden1);
  d += Arch::kHidden1;
  l.w2 = LayerMap<Arch::kHidden1, Arch::kHidden2>(d).transpose();
  d += Arch::kHidden1 * Arch::kHidden2;
  l.b2 = Eigen::Map<const VecX>(d, Arch::kHidden2);
  d += Arch::kHidden2;
  l.w3 = LayerMap<Arch::kHidden2, Arch::kOutputs>(d).transpose();
  d += Arch::kHidden2 * Arch::kOutputs;
  l.b3 = Eigen::Map<const VecX>(d, Arch::kOutputs);
  return l;
}

PolicyWeights PolicyLayers::pack() const {
  if (w1.rows() != Arch::kHidden1 || w1.cols() != Arch::kInputs ||
      w2.rows() != Arch::kHidden2 || w2.cols() != Arch::kHidden1 ||
      w3.rows() != Arch::kOutputs || w3.cols() != Arch::kHidden2 ||
      b1.size() != Arch::kHidden1 || b2.size() != Arch::kHidden2 ||
      b3.size() != Arch::kOutputs) {
    throw ShapeError("policy layers have the wrong shape");
  }
  VecX flat(Arch::kParameterCount);
  Eigen::Index at = 0;
  auto put_layer = [&](const Eigen::MatrixXd& w, const VecX& b) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> wt =
        w.transpose();
    flat.segment(at, wt.size()) = Eigen::Map<const VecX>(wt.data(), wt.size());
    at += wt.size();
    flat.segment(at, b.size()) = b;
    at += b.size();
  };
  put_layer(w1, b1);
  put_layer(w2, b2);
  put_layer(w3, b3);
  return PolicyWeights(std::move(flat));
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ActionDistribution forward(const PolicyWeights& weights, const Vec18& x) {
  const double* d = weights.flat().data();

  const auto w1 = LayerMap<Arch::kInputs, Arch::kHidden1>(d);
  d += Arch::kInputs * Arch::kHidden1;
  const Eigen::Map<const Eigen::Matrix<double, Arch::kHidden1, 1>> b1(d);
  d += Arch::kHidden1;
  const auto w2 = LayerMap<Arch::kHidden1, Arch::kHidden2>(d);
  d += Arch::kHidden1 * Arch::kHidden2;
  const Eigen::Map<const Eigen::Matrix<double, Arch::kHidden2, 1>> b2(d);
  d += Arch::kHidden2;
  const auto w3 = LayerMap<Arch::kHidden2, Arch::kOutputs>(d);
  d += Arch::kHidden2 * Arch::kOutputs;
  const Eigen::Map<const Eigen::Matrix<double, Arch::kOutputs, 1>> b3(d);

  const Eigen::Matrix<double, Arch::kHidden1, 1> h1 =
      (w1.transpose() * x + b1).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::Matrix<double, Arch::kHidden2, 1> h2 =
      (w2.transpose() * h1 + b2).unaryExpr([](double v) { return sigmoid(v); });
  const Eigen::Matrix<double, Arch::kOutputs, 1> out = w3.transpose() * h2 + b3;

  ActionDistribution dist;
  for (std::size_t n = 0; n < Arch::kActions; ++n) {
    const auto i = static_cast<Eigen::Index>(n);
    dist.mu(i) = softplus(out(i));
    dist.sigma(i) = softplus(out(i + Arch::kActions)) + kSigmaMin;
  }
  return dist;
}

Vec18 normalize_input(const Vec18& x, const Vec18& scale) { return x.cwiseQuotient(scale); }

Vec18 default_input_scale(const Mat6& total_mass) {
  Vec18 s;
  s << total_mass.diagonal(), Vec6::Constant(10.0), Vec6::Constant(100.0);
  return s;
}

LambdaAction sample_action(const ActionDistribution& dist, RngStream& rng) {
  Vec19 v;
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    v(n) = std::max(rng.normal(dist.mu(n), dist.sigma(n)), kActionFloor);
  }
  return LambdaAction::from_flat(v);
}

LambdaAction deterministic_action(const ActionDistribution& dist) {
  return LambdaAction::from_flat(dist.mu.cwiseMax(kActionFloor));
}

void save_policy(const std::string& path, const PolicyFile& file) {
  json j;
  j["format"] = "cempid-policy";
  j["version"] = 1;
  j["architecture"] = {
      {"inputs", Arch::kInputs},
      {"hidden", {Arch::kHidden1, Arch::kHidden2}},
      {"outputs", Arch::kOutputs},
      {"hidden_activation", "sigmoid"},
      {"mu_head", "softplus"},
      {"sigma_head", "softplus_plus_min"},
      {"sigma_min", kSigmaMin},
      {"parameter_count", Arch::kParameterCount},
      {"layout", "per layer: weights (inputs x outputs) row-major, then biases"},
  };
  j["weights"] = to_vector(file.weights.flat());
  j["input_scale"] = std::vector<double>(file.input_scale.data(), file.input_scale.data() + 18);
  j["seed"] = file.seed;
  j["config_digest"] = file.config_digest;
  if (file.has_search_state) {
    j["search"] = {{"iteration", file.iteration},
                   {"mean", to_vector(file.search_mean)},
                   {"variance", to_vector(file.search_variance)}};
  }
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write policy file {}", path));
  out << j.dump() << '\n';
  if (!out) throw IoError(fmt::format("failed writing policy file {}", path));
}

PolicyFile load_policy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open policy file {}", path));
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(fmt::format("policy file {} is not valid JSON: {}", path, e.what()));
  }
  if (!j.contains("weights")) throw IoError(fmt::format("policy file {} has no weights", path));
  if (j.contains("architecture") && j["architecture"].value("parameter_count", 0u) !=
                                        Arch::kParameterCount) {
    throw ShapeError(fmt::format("policy file {} has a different architecture", path));
  }

  PolicyFile f;
  f.weights = PolicyWeights(to_vecx(j["weights"], "weights"));
  if (j.contains("input_scale")) {
    const VecX s = to_vecx(j["input_scale"], "input_scale");
    if (s.size() != 18) throw ShapeError("input_scale must have 18 entries");
    f.input_scale = s;
  }
  f.seed = j.value("seed", std::uint64_t{0});
  f.config_digest = j.value("config_digest", std::string{});
  if (j.contains("search")) {
    const json& s = j["search"];
    f.has_search_state = true;
    f.iteration = s.value("iteration", std::size_t{0});
    f.search_mean = to_vecx(s.at("mean"), "search.mean");
    f.search_variance = to_vecx(s.at("variance"), "search.variance");
  }
  return f;
}

}  // namespace cempid
