#include "mgsos/simulator.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "mgsos/error.hpp"

namespace mgsos {

using Eigen::VectorXd;

void SimConfig::validate(int n) const {
  if (!(dt > 0.0)) throw ConfigError("dt", "must be positive");
  if (!(t_end >= dt)) throw ConfigError("t_end", "must be at least dt");
  if (!(convergence_tol > 0.0)) throw ConfigError("convergence_tol", "must be positive");
  if (!(divergence_bound > convergence_tol)) {
    throw ConfigError("divergence_bound", "must exceed convergence_tol");
  }
  if (record_every < 1) throw ConfigError("record_every", "must be at least 1");
  if (initial_delta.size() != n) {
    throw DimensionError("initial_delta has " + std::to_string(initial_delta.size()) +
                         " entries, network has " + std::to_string(n) + " buses");
  }
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::Converged: return "Converged";
    case Classification::Diverged: return "Diverged";
    case Classification::Undecided: return "Undecided";
  }
  return "?";
}

VectorXd default_initial_delta(const MicrogridNetwork& net) {
  VectorXd d = VectorXd::Constant(net.size(), 0.01);
  d(net.index_of(net.slack())) = 0.0;
  return d;
}

Trajectory simulate(const MicrogridNetwork& net, const SimConfig& cfg) {
  return simulate(build_state_space(net), cfg);
}

Trajectory simulate(const StateSpace& ss, const SimConfig& cfg) {
  const int n = static_cast<int>(ss.A.rows());
  cfg.validate(n);
  const long steps = std::lround(cfg.t_end / cfg.dt);
  const long kept = steps / cfg.record_every + 2;

  Trajectory tr;
  tr.states.resize(kept, n);
  tr.times.reserve(kept);
  long row = 0;
  auto record = [&](double t, const VectorXd& x) {
    tr.times.push_back(t);
    tr.states.row(row++) = x.transpose();
  };

  VectorXd x = cfg.initial_delta;
  record(0.0, x);
  const double h = cfg.dt;
  bool diverged = false;
  long k = 0;
  for (k = 1; k <= steps; ++k) {
    const VectorXd k1 = vector_field(ss, x);
    const VectorXd k2 = vector_field(ss, x + 0.5 * h * k1);
    const VectorXd k3 = vector_field(ss, x + 0.5 * h * k2);
    const VectorXd k4 = vector_field(ss, x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double nrm = x.cwiseAbs().maxCoeff();
    if (!std::isfinite(nrm) || nrm > cfg.divergence_bound) {
      diverged = true;
      break;
    }
    if (k % cfg.record_every == 0 || k == steps) record(k * h, x);
  }
  if (diverged) record(k * h, x);
  tr.states.conservativeResize(row, n);
  tr.final_state = x;
  if (diverged) {
    tr.classification = Classification::Diverged;
  } else if (x.cwiseAbs().maxCoeff() <= cfg.convergence_tol) {
    tr.classification = Classification::Converged;
  } else {
    tr.classification = Classification::Undecided;
  }
  return tr;
}

Eigen::MatrixXd angle_differences(const Trajectory& traj, const MicrogridNetwork& net) {
  const StateSpace ss = build_state_space(net);
  if (traj.states.cols() != ss.Cp.cols()) throw DimensionError("trajectory does not match network");
  return traj.states * ss.Cp.transpose();
}

namespace {

void write_number(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  os << buf;
}

void write_rows(std::ostream& os, const std::vector<double>& times, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    write_number(os, times[r]);
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      os << ',';
      write_number(os, m(r, c));
    }
    os << '\n';
  }
}

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const MicrogridNetwork& net) {
  os << "time";
  for (const auto& b : net.buses()) os << ",d" << b.id;
  os << '\n';
  write_rows(os, traj.times, traj.states);
}

void write_differences_csv(std::ostream& os, const Trajectory& traj, const MicrogridNetwork& net) {
  os << "time";
  for (const auto& e : net.edges()) {
    os << ",y_" << net.buses()[e.from].id << "_" << net.buses()[e.to].id;
  }
  os << '\n';
  write_rows(os, traj.times, angle_differences(traj, net));
}

}  // namespace mgsos
