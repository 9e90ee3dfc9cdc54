#include "cempid/pid.hpp"

#include <cmath>

#include "cempid/errors.hpp"

namespace cempid {

bool GainSet::finite() const {
  return kp.allFinite() && ki.allFinite() && kd.allFinite() && std::isfinite(alpha);
}

LoopState::LoopState(const Vec6& p, const Vec6& eta, const Vec6& err_integral) {
  x_ << p, eta, err_integral;
  if (!x_.allFinite()) throw Error("loop state has non-finite entries");
}

LoopState make_loop_state(const SimState& state, const VehicleModel& model) {
  const Vec6 eta_dot = kinematic_transform(state.eta) * state.nu;
  return LoopState(m_eta(state.eta, model) * eta_dot, state.eta, state.err_integral);
}

Vec6 pid_control(const SimState& state, const GainSet& gains, const Vec6& eta_d,
                 const VehicleModel& model) {
  const Mat6 j = kinematic_transform(state.eta);
  const Vec6 e = eta_d - state.eta;
  const Vec6 eta_dot = j * state.nu;
  const Vec6 world = gains.kp * e + gains.ki * state.err_integral - gains.kd * eta_dot;
  const Vec6 tau = j.transpose() * world + restoring_forces(state.eta, model);
  return model.thruster_allocation_B.partialPivLu().solve(tau);
}

bool saturate(Vec6& u, double u_max) {
  bool clipped = false;
  for (double& v : u) {
    if (v > u_max) {
      v = u_max;
      clipped = true;
    } else if (v < -u_max) {
      v = -u_max;
      clipped = true;
    }
  }
  return clipped;
}

}  // namespace cempid
