#pragma once

// Reference computations written independently of the library, used as
// test oracles. Everything here is deliberately naive.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cempid/pid.hpp"
#include "cempid/types.hpp"

namespace oracle {

using cempid::Mat3;
using cempid::Mat6;
using cempid::Vec3;
using cempid::Vec6;

// zyx Euler rotation composed from axis-angle factors.
inline Mat3 rotation(double roll, double pitch, double yaw) {
  using Eigen::AngleAxisd;
  return (AngleAxisd(yaw, Vec3::UnitZ()) * AngleAxisd(pitch, Vec3::UnitY()) *
          AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

// Body rates from Euler rates, inverted numerically.
inline Mat3 euler_rate_matrix(double roll, double pitch) {
  // omega = W * [roll_dot, pitch_dot, yaw_dot]
  Mat3 w;
  w << 1, 0, -std::sin(pitch),
      0, std::cos(roll), std::sin(roll) * std::cos(pitch),
      0, -std::sin(roll), std::cos(roll) * std::cos(pitch);
  return w.inverse();
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

// g(eta) = -[f_g + f_b; r_g x f_g + r_b x f_b] with r_g at the origin.
inline Vec6 restoring(const Vec6& eta, double weight, double buoyancy, const Vec3& r_b) {
  const Mat3 r = rotation(eta(3), eta(4), eta(5));
  const Vec3 f_g = r.transpose() * Vec3(0, 0, weight);
  const Vec3 f_b = r.transpose() * Vec3(0, 0, -buoyancy);
  Vec6 g;
  g.head<3>() = -(f_g + f_b);
  g.tail<3>() = -cross(r_b, f_b);
  return g;
}

// Kirchhoff form of C(nu) nu for a symmetric mass matrix.
inline Vec6 coriolis_times_nu(const Mat6& m, const Vec6& nu) {
  const Vec3 v = nu.head<3>(), w = nu.tail<3>();
  const Vec3 a = m.topLeftCorner<3, 3>() * v + m.topRightCorner<3, 3>() * w;
  const Vec3 b = m.bottomLeftCorner<3, 3>() * v + m.bottomRightCorner<3, 3>() * w;
  Vec6 out;
  out.head<3>() = cross(w, a);
  out.tail<3>() = cross(v, a) + cross(w, b);
  return out;
}

// 0.5 * sum_ij x_i Q_ij x_j with Q assembled entry by entry.
inline double lyapunov_double_sum(const cempid::Vec18& x, const cempid::GainSet& g,
                                  const Mat6& m_eta) {
  const Mat6 minv = m_eta.inverse();
  auto q = [&](int i, int j) -> double {
    const int bi = i / 6, bj = j / 6, ri = i % 6, rj = j % 6;
    const double eye = ri == rj ? 1.0 : 0.0;
    if (bi == 0 && bj == 0) return 0.5 * (minv(ri, rj) + minv(rj, ri));
    if ((bi == 0 && bj == 1) || (bi == 1 && bj == 0)) return g.alpha * eye;
    if (bi == 1 && bj == 1) return 0.5 * (g.kp(ri, rj) + g.kp(rj, ri));
    if (bi == 1 && bj == 2) return 0.5 * (g.ki(ri, rj) + g.ki(rj, ri));
    if (bi == 2 && bj == 1) return 0.5 * (g.ki(ri, rj) + g.ki(rj, ri));
    if (bi == 2 && bj == 2) return 0.5 * g.alpha * (g.ki(ri, rj) + g.ki(rj, ri));
    return 0.0;
  };
  double s = 0.0;
  for (int i = 0; i < 18; ++i) {
    for (int j = 0; j < 18; ++j) s += x(i) * q(i, j) * x(j);
  }
  return 0.5 * s;
}

// Sum over steps of the mean of six squared errors, accumulated naively.
inline double summed_cost(const std::vector<Vec6>& etas, const Vec6& eta_d) {
  double total = 0.0;
  for (const Vec6& e : etas) {
    double step = 0.0;
    for (int i = 0; i < 6; ++i) step += (eta_d(i) - e(i)) * (eta_d(i) - e(i));
    total += step / 6.0;
  }
  return total;
}

// First-order lag: m u' + d u = f, u(0) = 0.
inline double first_order_response(double m, double d, double f, double t) {
  return f / d * (1.0 - std::exp(-d * t / m));
}

inline Mat6 random_spd(std::mt19937_64& rng, double lo = 1.0, double hi = 10.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), ev(lo, hi);
  Mat6 a;
  for (int i = 0; i < 36; ++i) a(i) = u(rng);
  const Eigen::HouseholderQR<Mat6> qr(a);
  const Mat6 q = qr.householderQ();
  Vec6 d;
  for (int i = 0; i < 6; ++i) d(i) = ev(rng);
  return q * d.asDiagonal() * q.transpose();
}

inline Vec6 random_pose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-3.0, 3.0), rp(-1.2, 1.2), yaw(-3.1, 3.1);
  Vec6 eta;
  eta << pos(rng), pos(rng), pos(rng), rp(rng), rp(rng), yaw(rng);
  return eta;
}

}  // namespace oracle
