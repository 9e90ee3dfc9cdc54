#pragma once

// 6-DoF marine craft plant in NED coordinates (z down), Euler-angle attitude.
//
//   eta_dot = J(eta) nu
//   M nu_dot + C(nu) nu + D(nu_r) nu_r + g(eta) = B u
//
// M = M_RB + M_A, nu_r is the body velocity relative to a uniform current.

#include <cempid/types.hpp>

namespace cempid {

struct VehicleModel {
  Mat6 rigid_body_mass_matrix = Mat6::Identity();
  Mat6 added_mass_matrix = Mat6::Zero();
  Mat6 linear_damping = Mat6::Zero();
  Vec6 quadratic_damping = Vec6::Zero();
  double weight_N = 0.0;
  double buoyancy_N = 0.0;
  /// Centre of buoyancy relative to the centre of gravity (body origin), m.
  Vec3 cog_to_cob_offset = Vec3::Zero();
  /// Maps thruster commands to generalized body forces: delta = B u.
  Mat6 thruster_allocation_B = Mat6::Identity();

  Mat6 total_mass() const { return rigid_body_mass_matrix + added_mass_matrix; }

  /// Throws ConfigError when a physical invariant does not hold.
  void validate() const;
};

/// ROV-sized default plant (about two tonnes, neutrally buoyant, metacentric).
VehicleModel default_vehicle_model();

struct SimState {
  Vec6 eta = Vec6::Zero();
  Vec6 nu = Vec6::Zero();
  Vec6 err_integral = Vec6::Zero();
  double t = 0.0;
};

/// Uniform irrotational sea current: speed v_c, horizontal angle h_c and
/// vertical angle j_c (rad).
struct CurrentSpec {
  double v_c = 0.0;
  double h_c = 0.0;
  double j_c = 0.0;

  Vec3 world_velocity() const;
};

/// Elementwise bound applied to the error integral after every step.
inline constexpr double kIntegralClamp = 1e3;
/// Any state entry beyond this magnitude raises DivergenceError.
inline constexpr double kDivergenceBound = 1e6;
/// Central-difference step used for dM_eta/deta_i.
inline constexpr double kMetaFdStep = 1e-6;

Mat3 rotation_matrix(double roll, double pitch, double yaw);

/// J(eta) = blockdiag(R(roll, pitch, yaw), T(roll, pitch)).
/// Throws SingularityError within kPitchGuard of +-pi/2.
Mat6 kinematic_transform(const Vec6& eta);

/// J(eta)^-1 in closed form.
Mat6 kinematic_transform_inverse(const Vec6& eta);

/// World-frame inertia M_eta = J^-T (M_RB + M_A) J^-1, symmetrized.
Mat6 m_eta(const Vec6& eta, const VehicleModel& model);

/// sum_i (eta_i - eta_d_i) dM_eta/deta_i, by central differences with step h.
Mat6 m_eta_directional_term(const Vec6& eta, const Vec6& eta_d,
                            const VehicleModel& model,
                            double h = kMetaFdStep);

/// Skew-symmetric Coriolis-centripetal matrix built from the symmetric part
/// of the total mass matrix.
Mat6 coriolis_matrix(const Mat6& mass, const Vec6& nu);

/// D(nu) = linear_damping + diag(quadratic_damping .* |nu|).
Mat6 damping_matrix(const VehicleModel& model, const Vec6& nu);

/// Gravity and buoyancy term g(eta) as it appears on the left-hand side of
/// the equations of motion (Fossen sign convention). With W > B at zero
/// attitude the heave entry is -(W - B): the net force pushes the vehicle
/// down (+z), and g is its negation.
Vec6 restoring_forces(const Vec6& eta, const VehicleModel& model);

/// One semi-implicit Euler step. Body velocity is advanced first, then the
/// pose through J(eta) with the new velocity; err_integral accumulates
/// (eta_d - eta) dt and is clamped to +-kIntegralClamp.
SimState step_dynamics(const SimState& state, const Vec6& u_thruster,
                       const CurrentSpec& current, const Vec6& actuator_noise,
                       double dt, const VehicleModel& model,
                       const Vec6& eta_d = Vec6::Zero());

/// Continuous-time body acceleration for the given state and applied force.
Vec6 body_acceleration(const Vec6& eta, const Vec6& nu, const Vec6& force,
                       const CurrentSpec& current, const VehicleModel& model);

double kinetic_energy(const Vec6& nu, const VehicleModel& model);

}  // namespace cempid
