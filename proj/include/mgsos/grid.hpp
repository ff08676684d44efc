#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgsos/polynomial.hpp"

namespace mgsos {

struct Bus {
  int id = 0;
  double T_a = 1.0;
  double D_a = 0.0;
  double V_star = 1.0;
  std::optional<double> delta_star;
  std::optional<double> P_star;
};

struct Branch {
  int from = 0;
  int to = 0;
  double R = 0.0;
  double X = 0.0;

  /// Y = 1/sqrt(R²+X²).
  double admittance() const;
  /// θ = atan2(−X, R), so R = cos θ / Y and X = −sin θ / Y.
  double angle() const;
};

/// Canonical edge (from-index ≤ to-index) of the interconnection graph.
struct Edge {
  int from = 0;  // bus index, not id
  int to = 0;
  double kappa = 0.0;
  double y_star = 0.0;
};

/// Immutable network with a resolved equilibrium (δ*, P*) for every bus.
///
/// Setpoints: if every bus carries delta_star, P* is derived by forward
/// evaluation of the injections; otherwise P* must be given for every
/// non-slack bus and δ* comes from power_flow with δ_slack = delta_star of
/// the slack bus (default 0).
class MicrogridNetwork {
 public:
  MicrogridNetwork(std::vector<Bus> buses, std::vector<Branch> branches, int slack = 1);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<Branch>& branches() const { return branches_; }
  const std::vector<Edge>& edges() const { return edges_; }
  int slack() const { return slack_; }
  int size() const { return static_cast<int>(buses_.size()); }
  /// |E| counts both orientations.
  int num_directed_edges() const { return 2 * static_cast<int>(edges_.size()); }
  int index_of(int bus_id) const;
  bool lossless() const;

  const Eigen::VectorXd& delta_star() const { return delta_star_; }
  const Eigen::VectorXd& P_star() const { return P_star_; }

  /// P_i(δ) = Σ_k κ_ik sin(δ_i − δ_k) under fixed voltages and lossless lines.
  Eigen::VectorXd injections(const Eigen::VectorXd& delta) const;

  /// Tunable parameters: "T_a<id>", "D_a<id>", "X_<from>_<to>".
  std::vector<std::string> parameter_names() const;
  double parameter(const std::string& name) const;
  /// New network with parameters replaced; P* is held and δ* re-solved.
  MicrogridNetwork with_parameters(const std::map<std::string, double>& values) const;

 private:
  std::vector<Bus> buses_;
  std::vector<Branch> branches_;
  std::vector<Edge> edges_;
  int slack_;
  std::map<int, int> index_;
  Eigen::VectorXd delta_star_;
  Eigen::VectorXd P_star_;
};

struct StateSpace {
  Eigen::MatrixXd A;   // n×n, diag(−1/T_a)
  Eigen::MatrixXd Bp;  // n×|E⁰|
  Eigen::MatrixXd Cp;  // |E⁰|×n
  Eigen::VectorXd edge_offsets;
  Eigen::VectorXd edge_gains;
};

struct SectorModel {
  VariableRegistry registry;
  std::vector<VarId> delta_vars;
  std::vector<VarId> phi_vars;
  std::vector<VarId> y_vars;
  PolyVector r;  // in (φ, δ)
  PolyVector a;  // in δ
  std::vector<Polynomial> eta1;  // in y_j
  std::vector<Polynomial> eta2;
  /// Feasible y-interval [−π−y*, π−y*] per edge.
  std::vector<std::pair<double, double>> intervals;
};

/// Throws LosslessRequiredError for lossy branches.
StateSpace build_state_space(const MicrogridNetwork& net);
SectorModel build_sector(const MicrogridNetwork& net, const StateSpace& ss);

/// Sector polynomials of one nonlinearity as functions of y.
double sector_phi(double y, double y_star);
double sector_eta1(double y, double y_star);
double sector_eta2(double y, double y_star);
std::pair<double, double> sector_interval(double y_star);

/// δ̇ of the reduced model at deviation δ, with the true sine nonlinearity.
Eigen::VectorXd vector_field(const StateSpace& ss, const Eigen::VectorXd& delta);
/// δ̇ of the model with both edge orientations.
Eigen::VectorXd vector_field_unreduced(const MicrogridNetwork& net, const Eigen::VectorXd& delta);
/// A + B′·diag(cos y*)·C′.
Eigen::MatrixXd origin_jacobian(const StateSpace& ss);

/// Throws TopologyError when the remaining graph is empty or disconnected.
MicrogridNetwork island(const MicrogridNetwork& net, const std::set<int>& removed);

/// Newton-Raphson on the angle-only injections; throws PowerFlowError.
Eigen::VectorXd power_flow(const MicrogridNetwork& net, int slack);
/// Same model for explicit data; `P` holds the target injections.
Eigen::VectorXd power_flow(const MicrogridNetwork& net, int slack, const Eigen::VectorXd& P,
                           double slack_angle);

MicrogridNetwork network_from_json(const nlohmann::json& j);
MicrogridNetwork load_network(const std::string& path);
nlohmann::json to_json(const MicrogridNetwork& net);

}  // namespace mgsos
