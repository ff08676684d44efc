#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mgsos/error.hpp"
#include "mgsos/simulator.hpp"
#include "support.hpp"

using namespace mgsos;
using mgsos::testing::single_bus;
using mgsos::testing::three_bus;
using mgsos::testing::three_bus_suggested;
using Eigen::VectorXd;

namespace {

SimConfig config(const VectorXd& x0, double t_end, double dt) {
  SimConfig c;
  c.initial_delta = x0;
  c.t_end = t_end;
  c.dt = dt;
  return c;
}

}  // namespace

TEST(Simulator, ScalarDecayMatchesExponential) {
  const Trajectory tr = simulate(single_bus(1.0), config(VectorXd::Ones(1), 1.0, 1e-3));
  EXPECT_NEAR(tr.final_state(0), std::exp(-1.0), 1e-6);
  EXPECT_NEAR(tr.final_state(0), 0.367879, 1e-6);
  EXPECT_NEAR(tr.times.back(), 1.0, 1e-12);
}

TEST(Simulator, ZeroStaysZero) {
  const Trajectory tr = simulate(three_bus(), config(VectorXd::Zero(3), 5.0, 1e-2));
  EXPECT_EQ(tr.states.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(tr.classification, Classification::Converged);
}

TEST(Simulator, OriginalParametersDiverge) {
  const Trajectory tr = simulate(three_bus(), config(VectorXd::Constant(3, 0.01), 20.0, 1e-3));
  EXPECT_EQ(tr.classification, Classification::Diverged);
  EXPECT_LT(tr.times.back(), 20.0);
  EXPECT_GT(tr.final_state.cwiseAbs().maxCoeff(), 10.0);
}

TEST(Simulator, SuggestedParametersConverge) {
  const Trajectory tr = simulate(three_bus_suggested(), config(VectorXd::Constant(3, 0.01), 20.0, 1e-3));
  EXPECT_EQ(tr.classification, Classification::Converged);
  EXPECT_LE(tr.final_state.cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Simulator, SlowInstanceUndecided) {
  const Trajectory tr = simulate(single_bus(100.0), config(VectorXd::Ones(1), 1.0, 1e-2));
  EXPECT_EQ(tr.classification, Classification::Undecided);
}

TEST(Simulator, NonFiniteCountsAsDiverged) {
  SimConfig c = config(VectorXd::Constant(1, std::nan("")), 1.0, 1e-2);
  EXPECT_EQ(simulate(single_bus(1.0), c).classification, Classification::Diverged);
}

TEST(Simulator, Rk4OrderFactor) {
  const MicrogridNetwork net = three_bus_suggested();
  const VectorXd x0 = VectorXd::Constant(3, 0.3);
  const double h = 0.1;
  const VectorXd ref = simulate(net, config(x0, 4.0, h / 8)).final_state;
  const double e1 = (simulate(net, config(x0, 4.0, h)).final_state - ref).norm();
  const double e2 = (simulate(net, config(x0, 4.0, h / 2)).final_state - ref).norm();
  const double factor = e1 / e2;
  EXPECT_GE(factor, 12.0);
  EXPECT_LE(factor, 20.0);
}

TEST(Simulator, ConfigValidation) {
  EXPECT_THROW(simulate(single_bus(1.0), config(VectorXd::Ones(1), 1.0, 0.0)), ConfigError);
  EXPECT_THROW(simulate(single_bus(1.0), config(VectorXd::Ones(1), 1e-4, 1e-3)), ConfigError);
  EXPECT_THROW(simulate(single_bus(1.0), config(VectorXd::Ones(2), 1.0, 1e-3)), DimensionError);
  SimConfig c = config(VectorXd::Ones(1), 1.0, 1e-3);
  c.divergence_bound = 1e-4;
  EXPECT_THROW(simulate(single_bus(1.0), c), ConfigError);
}

TEST(Simulator, DefaultInitialSkipsSlack) {
  const VectorXd d = default_initial_delta(three_bus());
  EXPECT_EQ(d(0), 0.0);
  EXPECT_EQ(d(1), 0.01);
  EXPECT_EQ(d(2), 0.01);
}

TEST(Simulator, AngleDifferencesZero) {
  const MicrogridNetwork net = three_bus();
  const Trajectory tr = simulate(net, config(VectorXd::Zero(3), 0.1, 1e-2));
  EXPECT_EQ(angle_differences(tr, net).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Simulator, AngleDifferencesTwoBus) {
  std::vector<Bus> buses = {{1, 1.0, 0.0, 1.0, 0.0, {}}, {2, 1.0, 0.0, 1.0, 0.0, {}}};
  const MicrogridNetwork net(buses, {{1, 2, 0, 0.5}});
  Trajectory tr;
  tr.times = {0.0};
  tr.states = Eigen::MatrixXd(1, 2);
  tr.states << 0.7, 0.0;
  EXPECT_DOUBLE_EQ(angle_differences(tr, net)(0, 0), 0.7);
}

TEST(Simulator, AngleDifferencesMatchRecomputation) {
  const MicrogridNetwork net = three_bus_suggested();
  const Trajectory tr = simulate(net, config(VectorXd::Constant(3, 0.2), 2.0, 1e-2));
  const Eigen::MatrixXd diff = angle_differences(tr, net);
  for (Eigen::Index s = 0; s < tr.states.rows(); ++s) {
    for (std::size_t j = 0; j < net.edges().size(); ++j) {
      const auto& e = net.edges()[j];
      EXPECT_EQ(diff(s, j), tr.states(s, e.from) - tr.states(s, e.to));
    }
  }
}

TEST(Simulator, CsvHeaders) {
  const MicrogridNetwork net = three_bus_suggested();
  SimConfig c = config(VectorXd::Constant(3, 0.01), 1.0, 1e-2);
  c.record_every = 10;
  const Trajectory tr = simulate(net, c);
  EXPECT_EQ(tr.times.size(), 11u);
  std::ostringstream a, b;
  write_trajectory_csv(a, tr, net);
  write_differences_csv(b, tr, net);
  EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "time,d1,d2,d3");
  EXPECT_EQ(b.str().substr(0, b.str().find('\n')), "time,y_1_2,y_1_3,y_2_3");
  const std::string csv = a.str();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 12);
}
