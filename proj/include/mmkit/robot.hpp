#pragma once

#include "mmkit/control.hpp"
#include "mmkit/diffdrive.hpp"
#include "mmkit/dynamics.hpp"

#include <string>

namespace mmkit {

struct GripperParams {
  double max_opening = 0.1;  // m
  double max_effort = 60.0;  // N
};

/// Everything the robot description file carries.
struct RobotDescription {
  std::string name;
  DynamicModel model;
  Eigen::VectorXd velocity_limits;
  Eigen::VectorXd acceleration_limits;
  Eigen::VectorXd effort_limits;
  JointVector tuck;
  PidGains arm_gains;
  BaseParams base;
  GripperParams gripper;

  const KinematicChain& chain() const { return model.chain(); }
  void validate() const;
};

}  // namespace mmkit
