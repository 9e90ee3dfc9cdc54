#include "cempid/vehicle.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <fmt/format.h>

#include "cempid/errors.hpp"

namespace cempid {

namespace {

void check_pitch(double pitch) {
  if (!std::isfinite(pitch) ||
      std::abs(pitch) >= std::numbers::pi / 2 - kPitchGuard) {
    throw SingularityError(
        fmt::format("pitch {} reached the Euler singularity guard", pitch));
  }
}

Mat3 skew(const Vec3& a) {
  Mat3 s;
  s << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return s;
}

bool within_envelope(const Vec6& v) {
  for (double x : v) {
    if (!std::isfinite(x) || std::abs(x) > kDivergenceBound) return false;
  }
  return true;
}

}  // namespace

void VehicleModel::validate() const {
  const Mat6 m = total_mass();
  if (!m.allFinite() || !linear_damping.allFinite() ||
      !quadratic_damping.allFinite() || !thruster_allocation_B.allFinite() ||
      !cog_to_cob_offset.allFinite() || !std::isfinite(weight_N) ||
      !std::isfinite(buoyancy_N)) {
    throw ConfigError("vehicle model has non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * m.cwiseAbs().maxCoeff()) {
    throw ConfigError("total mass matrix M_RB + M_A is not symmetric");
  }
  if (Eigen::LLT<Mat6>(m).info() != Eigen::Success) {
    throw ConfigError("total mass matrix M_RB + M_A is not positive definite");
  }
  if ((quadratic_damping.array() < 0.0).any()) {
    throw ConfigError("quadratic damping entries must be >= 0");
  }
  Eigen::SelfAdjointEigenSolver<Mat6> damp(symmetrized(linear_damping),
                                           Eigen::EigenvaluesOnly);
  if (damp.eigenvalues().minCoeff() < -1e-9 * (1.0 + linear_damping.norm())) {
    throw ConfigError("linear damping is not positive semi-definite");
  }
  Eigen::JacobiSVD<Mat6> svd(thruster_allocation_B);
  const auto& s = svd.singularValues();
  if (s(5) <= 0.0 || s(0) / s(5) >= 1e6) {
    throw ConfigError("thruster allocation matrix is singular or ill-conditioned");
  }
}

VehicleModel default_vehicle_model() {
  VehicleModel m;
  Vec6 rb;
  rb << 1862.0, 1862.0, 1862.0, 525.0, 794.0, 691.0;
  m.rigid_body_mass_matrix = rb.asDiagonal();
  m.added_mass_matrix = (0.5 * rb).asDiagonal();
  Vec6 lin;
  lin << 75.0, 70.0, 730.0, 270.0, 310.0, 105.0;
  m.linear_damping = lin.asDiagonal();
  m.quadratic_damping << 750.0, 990.0, 1820.0, 670.0, 770.0, 520.0;
  m.weight_N = 1862.0 * 9.81;
  m.buoyancy_N = m.weight_N;
  m.cog_to_cob_offset = Vec3(0.0, 0.0, -0.1);
  m.thruster_allocation_B = Mat6::Identity();
  return m;
}

Vec3 CurrentSpec::world_velocity() const {
  return v_c * Vec3(std::cos(j_c) * std::cos(h_c), std::cos(j_c) * std::sin(h_c),
                    std::sin(j_c));
}

Mat3 rotation_matrix(double roll, double pitch, double yaw) {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
          Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Mat6 kinematic_transform(const Vec6& eta) {
  const double phi = eta(kRoll), theta = eta(kPitch);
  check_pitch(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double ct = std::cos(theta), tt = std::tan(theta);

  Mat3 t;
  t << 1.0, sp * tt, cp * tt,
       0.0, cp, -sp,
       0.0, sp / ct, cp / ct;

  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = rotation_matrix(phi, theta, eta(kYaw));
  j.bottomRightCorner<3, 3>() = t;
  return j;
}

Mat6 kinematic_transform_inverse(const Vec6& eta) {
  const double phi = eta(kRoll), theta = eta(kPitch);
  check_pitch(theta);
  const double sp = std::sin(phi), cp = std::cos(phi);
  const double st = std::sin(theta), ct = std::cos(theta);

  Mat3 t_inv;
  t_inv << 1.0, 0.0, -st,
           0.0, cp, ct * sp,
           0.0, -sp, ct * cp;

  Mat6 j = Mat6::Zero();
  j.topLeftCorner<3, 3>() = rotation_matrix(phi, theta, eta(kYaw)).transpose();
  j.bottomRightCorner<3, 3>() = t_inv;
  return j;
}

Mat6 m_eta(const Vec6& eta, const VehicleModel& model) {
  const Mat6 j_inv = kinematic_transform_inverse(eta);
  return symmetrized(j_inv.transpose() * model.total_mass() * j_inv);
}

Mat6 m_eta_directional_term(const Vec6& eta, const Vec6& eta_d,
                            const VehicleModel& model, double h) {
  Mat6 sum = Mat6::Zero();
  for (int i = 0; i < 6; ++i) {
    const double coeff = eta(i) - eta_d(i);
    if (coeff == 0.0) continue;
    Vec6 plus = eta, minus = eta;
    plus(i) += h;
    minus(i) -= h;
    sum += coeff * (m_eta(plus, model) - m_eta(minus, model)) / (2.0 * h);
  }
  return sum;
}

Mat6 coriolis_matrix(const Mat6& mass, const Vec6& nu) {
  const Mat6 m = symmetrized(mass);
  const Vec3 v1 = nu.head<3>(), v2 = nu.tail<3>();
  const Vec3 a = m.topLeftCorner<3, 3>() * v1 + m.topRightCorner<3, 3>() * v2;
  const Vec3 b = m.bottomLeftCorner<3, 3>() * v1 + m.bottomRightCorner<3, 3>() * v2;
  Mat6 c = Mat6::Zero();
  c.topRightCorner<3, 3>() = -skew(a);
  c.bottomLeftCorner<3, 3>() = -skew(a);
  c.bottomRightCorner<3, 3>() = -skew(b);
  return c;
}

Mat6 damping_matrix(const VehicleModel& model, const Vec6& nu) {
  Mat6 d = model.linear_damping;
  d.diagonal() += model.quadratic_damping.cwiseProduct(nu.cwiseAbs());
  return d;
}

Vec6 restoring_forces(const Vec6& eta, const VehicleModel& model) {
  const double w = model.weight_N, b = model.buoyancy_N;
  const double xb = model.cog_to_cob_offset.x();
  const double yb = model.cog_to_cob_offset.y();
  const double zb = model.cog_to_cob_offset.z();
  const double sp = std::sin(eta(kRoll)), cp = std::cos(eta(kRoll));
  const double st = std::sin(eta(kPitch)), ct = std::cos(eta(kPitch));

  Vec6 g;
  g << (w - b) * st,
       -(w - b) * ct * sp,
       -(w - b) * ct * cp,
       yb * b * ct * cp - zb * b * ct * sp,
       -zb * b * st - xb * b * ct * cp,
       xb * b * ct * sp + yb * b * st;
  return g;
}

Vec6 body_acceleration(const Vec6& eta, const Vec6& nu, const Vec6& force,
                       const CurrentSpec& current, const VehicleModel& model) {
  const Mat6 mass = model.total_mass();
  const Mat3 r = rotation_matrix(eta(kRoll), eta(kPitch), eta(kYaw));
  Vec6 nu_c = Vec6::Zero();
  nu_c.head<3>() = r.transpose() * current.world_velocity();
  const Vec6 nu_r = nu - nu_c;

  const Vec6 rhs = force - coriolis_matrix(mass, nu) * nu -
                   damping_matrix(model, nu_r) * nu_r -
                   restoring_forces(eta, model);
  return mass.llt().solve(rhs);
}

SimState step_dynamics(const SimState& state, const Vec6& u_thruster,
                       const CurrentSpec& current, const Vec6& actuator_noise,
                       double dt, const VehicleModel& model, const Vec6& eta_d) {
  if (!(dt > 0.0)) throw Error("step_dynamics requires dt > 0");
  const Mat6 j = kinematic_transform(state.eta);

  const Vec6 force = model.thruster_allocation_B * (u_thruster + actuator_noise);
  const Vec6 accel = body_acceleration(state.eta, state.nu, force, current, model);

  SimState next;
  next.nu = state.nu + dt * accel;
  next.eta = state.eta + dt * (j * next.nu);
  next.err_integral = (state.err_integral + dt * (eta_d - state.eta))
                          .cwiseMax(-kIntegralClamp)
                          .cwiseMin(kIntegralClamp);
  next.t = state.t + dt;

  if (!within_envelope(next.eta) || !within_envelope(next.nu) ||
      !within_envelope(next.err_integral)) {
    throw DivergenceError(fmt::format("state diverged at t = {}", next.t));
  }
  check_pitch(next.eta(kPitch));
  return next;
}

double kinetic_energy(const Vec6& nu, const VehicleModel& model) {
  return 0.5 * nu.dot(model.total_mass() * nu);
}

}  // namespace cempid
