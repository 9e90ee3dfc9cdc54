#pragma once

// Lyapunov certificate for the model-based PID loop and the reduced
// positive parameter space that maps onto PID gains.
//
//   V(x) = 1/2 x^T Q x,  Q = [[M_eta^-1, a I, 0], [a I, kp, ki], [0, ki, a ki]]
//
// Gains are built so that kd - M_eta, ki and kp - kd - (2/a) ki are each
// similar to a positive diagonal matrix, and a is chosen from the curvature
// of M_eta along the current tracking error.

#include <array>
#include <cstdint>

#include <cempid/pid.hpp>
#include <cempid/types.hpp>
#include <cempid/vehicle.hpp>

namespace cempid {

/// [lambda1, lambda2, lambda3, epsilon], every entry strictly positive.
struct LambdaAction {
  Vec6 lambda1 = Vec6::Ones();
  Vec6 lambda2 = Vec6::Ones();
  Vec6 lambda3 = Vec6::Ones();
  double epsilon = 1.0;

  bool positive() const;
  /// Flat ordering: lambda1, lambda2, lambda3, epsilon.
  Vec19 flat() const;
  static LambdaAction from_flat(const Vec19& v);
};

/// Fixed positive invertible matrix P used in M_i = P diag(lambda_i) P^-1.
class SimilarityBasis {
 public:
  /// Throws IllConditionedError for non-positive, singular or badly
  /// conditioned matrices (condition number >= kMaxCondition).
  explicit SimilarityBasis(const Mat6& p);

  const Mat6& p() const { return p_; }
  const Mat6& p_inv() const { return p_inv_; }
  double condition_number() const { return cond_; }

  /// P diag(lambda) P^-1.
  Mat6 similar(const Vec6& lambda) const;

  static constexpr double kMaxCondition = 1e4;

 private:
  Mat6 p_;
  Mat6 p_inv_;
  double cond_ = 0.0;
};

/// Draws P with entries uniform in (0.1, 1.0) until cond(P) < 1e4.
/// Throws BasisGenerationError after 100 rejected draws.
SimilarityBasis make_basis(std::uint64_t seed);

/// Equality reparametrization of the constraint set, from explicit M1..M3:
///   kd = M_eta + M1, ki = M2,
///   alpha = maxabs(-kd * Dn^-1) + epsilon, Dn = -kd - 2 M_eta + S,
///   kp = kd + (2/alpha) ki + M3,
/// with S = sum_i (eta_i - eta_d_i) dM_eta/deta_i.
/// Throws IllConditionedError when Dn is numerically singular.
GainSet gains_from_structure(const Mat6& m1, const Mat6& m2, const Mat6& m3,
                             double epsilon, const Vec6& eta, const Vec6& eta_d,
                             const VehicleModel& model);

GainSet gains_from_lambda(const LambdaAction& action, const SimilarityBasis& basis,
                          const Vec6& eta, const Vec6& eta_d,
                          const VehicleModel& model);

/// Symmetrized 18x18 block matrix Q. Throws IllConditionedError when M_eta
/// cannot be inverted.
Mat18 lyapunov_matrix(const GainSet& gains, const Mat6& m_eta);

double lyapunov_value(const LoopState& x, const GainSet& gains, const Mat6& m_eta);

/// Below this loop-state norm a step counts as converged, hence stable.
inline constexpr double kConvergedNorm = 1e-6;

struct StateStability {
  bool stable = false;
  double v = 0.0;
  double v_dot = 0.0;
};

/// V > 0 and backward-difference V_dot < 0, or x_norm below kConvergedNorm.
StateStability state_stability_step(double v_now, double v_prev, double dt,
                                    double x_norm);

/// How a matrix inequality A > B is decided.
enum class MatrixOrder {
  /// Every eigenvalue of A - B has positive real part.
  kSpectral,
  /// Smallest eigenvalue of the symmetric part of A - B is positive.
  kLoewner,
};

/// One flag per constraint, in order:
///   [0] kd > M_eta
///   [1] ki > 0
///   [2] kp > kd + (2/alpha) ki
///   [3] (1-alpha)/2 kd - alpha M_eta + alpha/2 S > 0
///   [4] alpha > 0
using ConstraintFlags = std::array<bool, 5>;

/// Minimum eigenvalue measure of each constraint's difference matrix; the
/// flag is margin > 0.
struct ConstraintMargins {
  std::array<double, 5> margin{};
  ConstraintFlags flags() const;
};

/// Smallest real part of the spectrum (kSpectral) or smallest eigenvalue of
/// the symmetric part (kLoewner).
double min_eigen_measure(const Mat6& a, MatrixOrder order);

ConstraintMargins constraint_margins(const GainSet& gains, const Vec6& eta,
                                     const Vec6& eta_d, const VehicleModel& model,
                                     MatrixOrder order = MatrixOrder::kSpectral);

/// Same, with M_eta and the directional term already evaluated at eta.
ConstraintMargins constraint_margins(const GainSet& gains, const Mat6& m_eta,
                                     const Mat6& directional,
                                     MatrixOrder order = MatrixOrder::kSpectral);

ConstraintFlags check_param_constraints(const GainSet& gains, const Vec6& eta,
                                        const Vec6& eta_d, const VehicleModel& model,
                                        MatrixOrder order = MatrixOrder::kSpectral);

}  // namespace cempid
