#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgsos/grid.hpp"

namespace mgsos {

struct SimConfig {
  double t_end = 20.0;
  double dt = 1e-3;
  Eigen::VectorXd initial_delta;  // Δδ(0), one entry per bus
  double convergence_tol = 1e-3;
  double divergence_bound = 10.0;
  /// Keep every k-th step in the trajectory (the final step is always kept).
  int record_every = 1;

  void validate(int n) const;
};

enum class Classification { Converged, Diverged, Undecided };
std::string to_string(Classification c);

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // rows are recorded steps
  Classification classification = Classification::Undecided;
  Eigen::VectorXd final_state;
};

/// 0.01 on every bus except the slack.
Eigen::VectorXd default_initial_delta(const MicrogridNetwork& net);

/// Classic RK4 on Δδ̇ = AΔδ + B′φ(CpΔδ); stops early once ‖Δδ‖∞ exceeds the bound.
Trajectory simulate(const MicrogridNetwork& net, const SimConfig& cfg);
Trajectory simulate(const StateSpace& ss, const SimConfig& cfg);

/// Per-step Cp·Δδ.
Eigen::MatrixXd angle_differences(const Trajectory& traj, const MicrogridNetwork& net);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const MicrogridNetwork& net);
void write_differences_csv(std::ostream& os, const Trajectory& traj, const MicrogridNetwork& net);

}  // namespace mgsos
