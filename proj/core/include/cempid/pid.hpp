#pragma once

#include <cempid/types.hpp>
#include <cempid/vehicle.hpp>

namespace cempid {

/// PID gain matrices plus the Lyapunov cross-term weight alpha. Gains are not
/// required to be positive; constraint satisfaction is measured elsewhere.
struct GainSet {
  Mat6 kp = Mat6::Zero();
  Mat6 ki = Mat6::Zero();
  Mat6 kd = Mat6::Zero();
  double alpha = 1.0;

  bool finite() const;
};

/// Controller loop state x = [p, eta, integral of e] with p = M_eta * eta_dot.
class LoopState {
 public:
  LoopState() = default;
  /// Throws Error when the parts are non-finite.
  LoopState(const Vec6& p, const Vec6& eta, const Vec6& err_integral);

  const Vec18& x() const { return x_; }
  auto p() const { return x_.segment<6>(0); }
  auto eta() const { return x_.segment<6>(6); }
  auto err_integral() const { return x_.segment<6>(12); }

 private:
  Vec18 x_ = Vec18::Zero();
};

LoopState make_loop_state(const SimState& state, const VehicleModel& model);

/// u = B^-1 [ J^T(eta) (kp e + ki int(e) - kd eta_dot) + g(eta) ], e = eta_d - eta.
/// No saturation is applied.
Vec6 pid_control(const SimState& state, const GainSet& gains, const Vec6& eta_d,
                 const VehicleModel& model);

/// Symmetric clamp |u_i| <= u_max. Returns true when any entry was clipped.
bool saturate(Vec6& u, double u_max);

}  // namespace cempid
