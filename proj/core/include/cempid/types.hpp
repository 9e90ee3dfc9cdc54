#pragma once

#include <Eigen/Dense>

namespace cempid {

using Vec3 = Eigen::Matrix<double, 3, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Vec18 = Eigen::Matrix<double, 18, 1>;
using Vec19 = Eigen::Matrix<double, 19, 1>;
using Mat3 = Eigen::Matrix<double, 3, 3>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat18 = Eigen::Matrix<double, 18, 18>;
using VecX = Eigen::VectorXd;

/// Pose index names in (x, y, z, roll, pitch, yaw) order.
enum Dof : int { kX = 0, kY = 1, kZ = 2, kRoll = 3, kPitch = 4, kYaw = 5 };

/// Pitch must stay this far from +-pi/2 for the Euler-rate matrix to exist.
inline constexpr double kPitchGuard = 1e-3;

inline Mat6 symmetrized(const Mat6& a) { return 0.5 * (a + a.transpose()); }

}  // namespace cempid
