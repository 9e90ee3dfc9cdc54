#pragma once

#include <string>
#include <vector>

#include <cempid/config.hpp>

namespace cempid {

struct SelfTestResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Quick invariant checks against a loaded configuration: kinematics,
/// inertia, Coriolis skew-symmetry, basis inverse, constraint construction,
/// policy shape and baseline hold at the setpoint.
std::vector<SelfTestResult> run_self_tests(const Config& config);

}  // namespace cempid
