#include "cempid/lyapunov.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "cempid/errors.hpp"
#include "cempid/rng.hpp"

namespace cempid {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kBasisAttempts = 100;
constexpr double kSingularRcond = 1e-10;

double max_abs(const Mat6& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

bool LambdaAction::positive() const {
  return (lambda1.array() > 0.0).all() && (lambda2.array() > 0.0).all() &&
         (lambda3.array() > 0.0).all() && epsilon > 0.0 && flat().allFinite();
}

Vec19 LambdaAction::flat() const {
  Vec19 v;
  v << lambda1, lambda2, lambda3, epsilon;
  return v;
}

LambdaAction LambdaAction::from_flat(const Vec19& v) {
  LambdaAction a;
  a.lambda1 = v.segment<6>(0);
  a.lambda2 = v.segment<6>(6);
  a.lambda3 = v.segment<6>(12);
  a.epsilon = v(18);
  return a;
}

SimilarityBasis::SimilarityBasis(const Mat6& p) : p_(p) {
  if (!p.allFinite() || (p.array() <= 0.0).any()) {
    throw IllConditionedError("similarity basis must have positive finite entries");
  }
  Eigen::JacobiSVD<Mat6> svd(p);
  const auto& s = svd.singularValues();
  cond_ = s(5) > 0.0 ? s(0) / s(5) : std::numeric_limits<double>::infinity();
  if (!(cond_ < kMaxCondition)) {
    throw IllConditionedError(fmt::format("similarity basis condition number {}", cond_));
  }
  p_inv_ = p.fullPivLu().inverse();
}

Mat6 SimilarityBasis::similar(const Vec6& lambda) const {
  return p_ * lambda.asDiagonal() * p_inv_;
}

SimilarityBasis make_basis(std::uint64_t seed) {
  RngStream rng(seed, StreamPurpose::kBasis);
  for (int attempt = 0; attempt < kBasisAttempts; ++attempt) {
    Mat6 p;
    for (int r = 0; r < 6; ++r) {
      for (int c = 0; c < 6; ++c) p(r, c) = rng.uniform(0.1, 1.0);
    }
    try {
      SimilarityBasis basis(p);
      if ((basis.p() * basis.p_inv() - Mat6::Identity()).cwiseAbs().maxCoeff() < 1e-8) {
        return basis;
      }
    } catch (const IllConditionedError&) {
    }
  }
  throw BasisGenerationError(
      fmt::format("no well-conditioned basis after {} draws (seed {})", kBasisAttempts, seed));
}

GainSet gains_from_structure(const Mat6& m1, const Mat6& m2, const Mat6& m3,
                             double epsilon, const Vec6& eta, const Vec6& eta_d,
                             const VehicleModel& model) {
  const Mat6 meta = m_eta(eta, model);
  const Mat6 directional = m_eta_directional_term(eta, eta_d, model);

  GainSet g;
  g.kd = meta + m1;
  g.ki = m2;

  const Mat6 denom = -g.kd - 2.0 * meta + directional;
  const Eigen::PartialPivLU<Mat6> lu(denom.transpose());
  if (!(lu.rcond() > kSingularRcond)) {
    throw IllConditionedError("alpha denominator matrix is singular");
  }
  // (-kd) * denom^-1 == (denom^-T (-kd)^T)^T
  const Mat6 quotient = lu.solve((-g.kd).transpose()).transpose();
  g.alpha = max_abs(quotient) + epsilon;
  g.kp = g.kd + (2.0 / g.alpha) * g.ki + m3;
  return g;
}

GainSet gains_from_lambda(const LambdaAction& action, const SimilarityBasis& basis,
                          const Vec6& eta, const Vec6& eta_d,
                          const VehicleModel& model) {
  if (!action.positive()) throw Error("lambda action must be strictly positive");
  return gains_from_structure(basis.similar(action.lambda1), basis.similar(action.lambda2),
                              basis.similar(action.lambda3), action.epsilon, eta, eta_d,
                              model);
}

Mat18 lyapunov_matrix(const GainSet& gains, const Mat6& m_eta) {
  const Eigen::LLT<Mat6> llt(symmetrized(m_eta));
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError("M_eta is not invertible");
  }
  const Mat6 id = Mat6::Identity();
  Mat18 q = Mat18::Zero();
  q.block<6, 6>(0, 0) = llt.solve(id);
  q.block<6, 6>(0, 6) = gains.alpha * id;
  q.block<6, 6>(6, 0) = gains.alpha * id;
  q.block<6, 6>(6, 6) = gains.kp;
  q.block<6, 6>(6, 12) = gains.ki;
  q.block<6, 6>(12, 6) = gains.ki;
  q.block<6, 6>(12, 12) = gains.alpha * gains.ki;
  return 0.5 * (q + q.transpose());
}

double lyapunov_value(const LoopState& x, const GainSet& gains, const Mat6& m_eta) {
  const Vec18& v = x.x();
  if (v.isZero(0.0)) return 0.0;
  return 0.5 * v.dot(lyapunov_matrix(gains, m_eta) * v);
}

StateStability state_stability_step(double v_now, double v_prev, double dt,
                                    double x_norm) {
  StateStability s;
  s.v = v_now;
  s.v_dot = (v_now - v_prev) / dt;
  s.stable = (v_now > 0.0 && s.v_dot < 0.0) || x_norm < kConvergedNorm;
  return s;
}

ConstraintFlags ConstraintMargins::flags() const {
  ConstraintFlags f{};
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = margin[i] > 0.0;
  return f;
}

double min_eigen_measure(const Mat6& a, MatrixOrder order) {
  if (!a.allFinite()) return kNegInf;
  if (order == MatrixOrder::kLoewner) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(symmetrized(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  Eigen::EigenSolver<Mat6> es(a, false);
  if (es.info() != Eigen::Success) return kNegInf;
  return es.eigenvalues().real().minCoeff();
}

ConstraintMargins constraint_margins(const GainSet& gains, const Mat6& meta,
                                     const Mat6& directional, MatrixOrder order) {
  const double a = gains.alpha;
  ConstraintMargins m;
  m.margin[0] = min_eigen_measure(gains.kd - meta, order);
  m.margin[1] = min_eigen_measure(gains.ki, order);
  m.margin[2] = (a > 0.0 && std::isfinite(a))
                    ? min_eigen_measure(gains.kp - gains.kd - (2.0 / a) * gains.ki, order)
                    : kNegInf;
  m.margin[3] = min_eigen_measure(
      0.5 * (1.0 - a) * gains.kd - a * meta + 0.5 * a * directional, order);
  m.margin[4] = std::isfinite(a) ? a : kNegInf;
  return m;
}

ConstraintMargins constraint_margins(const GainSet& gains, const Vec6& eta,
                                     const Vec6& eta_d, const VehicleModel& model,
                                     MatrixOrder order) {
  return constraint_margins(gains, m_eta(eta, model),
                            m_eta_directional_term(eta, eta_d, model), order);
}

ConstraintFlags check_param_constraints(const GainSet& gains, const Vec6& eta,
                                        const Vec6& eta_d, const VehicleModel& model,
                                        MatrixOrder order) {
  return constraint_margins(gains, eta, eta_d, model, order).flags();
}

}  // namespace cempid
