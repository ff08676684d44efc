#include "mgsos/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "mgsos/error.hpp"
#include "mgsos/json_util.hpp"

namespace mgsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Edge> make_edges(const std::vector<Bus>& buses, const std::vector<Branch>& branches,
                             const std::map<int, int>& index) {
  std::vector<Edge> edges;
  for (const auto& br : branches) {
    Edge e;
    e.from = index.at(br.from);
    e.to = index.at(br.to);
    // Lossless convention: P_ik = V_i V_k sin(δ_i − δ_k) / X.
    const double vv = buses[e.from].V_star * buses[e.to].V_star;
    e.kappa = br.R == 0.0 ? vv / br.X : vv * br.admittance();
    edges.push_back(e);
  }
  return edges;
}

VectorXd injections_of(const std::vector<Edge>& edges, int n, const VectorXd& delta) {
  VectorXd P = VectorXd::Zero(n);
  for (const auto& e : edges) {
    const double s = e.kappa * std::sin(delta(e.from) - delta(e.to));
    P(e.from) += s;
    P(e.to) -= s;
  }
  return P;
}

VectorXd solve_angles(const std::vector<Edge>& edges, int n, int slack_idx, const VectorXd& P,
                      double slack_angle) {
  if (n == 2 && edges.size() == 1) {
    const int other = slack_idx == 0 ? 1 : 0;
    const double ratio = std::abs(P(other) / edges[0].kappa);
    if (ratio > 1.0) {
      throw PowerFlowError("two-bus power flow: |P*/kappa| = " + std::to_string(ratio) + " > 1");
    }
  }
  VectorXd delta = VectorXd::Constant(n, slack_angle);
  if (n == 1) return delta;
  std::vector<int> rows;
  for (int i = 0; i < n; ++i) {
    if (i != slack_idx) rows.push_back(i);
  }
  const int m = static_cast<int>(rows.size());
  for (int iter = 0; iter <= 50; ++iter) {
    const VectorXd mis = injections_of(edges, n, delta) - P;
    double worst = 0.0;
    for (int i : rows) worst = std::max(worst, std::abs(mis(i)));
    if (!std::isfinite(worst)) break;
    if (worst <= 1e-10) return delta;
    if (iter == 50) break;
    MatrixXd J = MatrixXd::Zero(n, n);
    for (const auto& e : edges) {
      const double c = e.kappa * std::cos(delta(e.from) - delta(e.to));
      J(e.from, e.from) += c;
      J(e.from, e.to) -= c;
      J(e.to, e.to) += c;
      J(e.to, e.from) -= c;
    }
    MatrixXd Jr(m, m);
    VectorXd r(m);
    for (int a = 0; a < m; ++a) {
      r(a) = mis(rows[a]);
      for (int b = 0; b < m; ++b) Jr(a, b) = J(rows[a], rows[b]);
    }
    Eigen::FullPivLU<MatrixXd> lu(Jr);
    if (!lu.isInvertible()) throw PowerFlowError("power flow: singular Jacobian");
    const VectorXd step = lu.solve(r);
    for (int a = 0; a < m; ++a) delta(rows[a]) -= step(a);
  }
  throw PowerFlowError("power flow did not converge in 50 iterations");
}

}  // namespace

double Branch::admittance() const { return 1.0 / std::sqrt(R * R + X * X); }
double Branch::angle() const { return std::atan2(-X, R); }

MicrogridNetwork::MicrogridNetwork(std::vector<Bus> buses, std::vector<Branch> branches, int slack)
    : buses_(std::move(buses)), branches_(std::move(branches)), slack_(slack) {
  if (buses_.empty()) throw ConfigError("buses", "network has no buses");
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const auto& b = buses_[i];
    const std::string path = "buses[" + std::to_string(i) + "]";
    if (!index_.emplace(b.id, static_cast<int>(i)).second) {
      throw ConfigError(path + ".id", "duplicate bus id " + std::to_string(b.id));
    }
    if (!(b.V_star > 0.0)) throw ConfigError(path + ".V_star", "must be positive");
    if (b.T_a == 0.0 || !std::isfinite(b.T_a)) throw ConfigError(path + ".T_a", "must be nonzero");
    if (!std::isfinite(b.D_a)) throw ConfigError(path + ".D_a", "must be finite");
  }
  if (!index_.count(slack_)) throw ConfigError("slack", "unknown bus " + std::to_string(slack_));
  for (std::size_t k = 0; k < branches_.size(); ++k) {
    auto& br = branches_[k];
    const std::string path = "branches[" + std::to_string(k) + "]";
    if (!index_.count(br.from)) throw ConfigError(path + ".from", "unknown bus");
    if (!index_.count(br.to)) throw ConfigError(path + ".to", "unknown bus");
    if (br.from == br.to) throw ConfigError(path, "from and to are the same bus");
    if (br.X == 0.0 || !std::isfinite(br.X)) throw ConfigError(path + ".X", "must be nonzero");
    if (!std::isfinite(br.R)) throw ConfigError(path + ".R", "must be finite");
    if (index_.at(br.from) > index_.at(br.to)) std::swap(br.from, br.to);
  }
  edges_ = make_edges(buses_, branches_, index_);

  // Connectivity.
  const int n = size();
  std::vector<int> comp(n, -1);
  int ncomp = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<int> stack{s};
    comp[s] = ncomp;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& e : edges_) {
        for (int v : {e.from == u ? e.to : -1, e.to == u ? e.from : -1}) {
          if (v >= 0 && comp[v] < 0) {
            comp[v] = ncomp;
            stack.push_back(v);
          }
        }
      }
    }
    ++ncomp;
  }
  if (ncomp > 1) {
    std::vector<std::vector<int>> groups(ncomp);
    for (int i = 0; i < n; ++i) groups[comp[i]].push_back(buses_[i].id);
    std::string msg = "network is disconnected:";
    for (const auto& g : groups) {
      msg += " {";
      for (std::size_t k = 0; k < g.size(); ++k) msg += (k ? "," : "") + std::to_string(g[k]);
      msg += "}";
    }
    throw TopologyError(msg, groups);
  }

  const int si = index_.at(slack_);
  const bool all_delta = std::all_of(buses_.begin(), buses_.end(),
                                     [](const Bus& b) { return b.delta_star.has_value(); });
  delta_star_.resize(n);
  if (all_delta) {
    for (int i = 0; i < n; ++i) delta_star_(i) = *buses_[i].delta_star;
    P_star_ = injections_of(edges_, n, delta_star_);
  } else {
    VectorXd P = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (i == si) continue;
      if (!buses_[i].P_star) {
        throw ConfigError("buses[" + std::to_string(i) + "]",
                          "needs delta_star or P_star (delta_star is missing on some bus)");
      }
      P(i) = *buses_[i].P_star;
    }
    delta_star_ = solve_angles(edges_, n, si, P, buses_[si].delta_star.value_or(0.0));
    P_star_ = injections_of(edges_, n, delta_star_);
  }
  for (auto& e : edges_) e.y_star = delta_star_(e.from) - delta_star_(e.to);
  for (int i = 0; i < n; ++i) {
    buses_[i].delta_star = delta_star_(i);
    buses_[i].P_star = P_star_(i);
  }
}

int MicrogridNetwork::index_of(int bus_id) const {
  auto it = index_.find(bus_id);
  if (it == index_.end()) throw DimensionError("unknown bus id " + std::to_string(bus_id));
  return it->second;
}

bool MicrogridNetwork::lossless() const {
  return std::all_of(branches_.begin(), branches_.end(), [](const Branch& b) { return b.R == 0.0; });
}

VectorXd MicrogridNetwork::injections(const VectorXd& delta) const {
  if (delta.size() != size()) throw DimensionError("injections: wrong angle vector length");
  return injections_of(edges_, size(), delta);
}

std::vector<std::string> MicrogridNetwork::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& b : buses_) names.push_back("T_a" + std::to_string(b.id));
  for (const auto& b : buses_) names.push_back("D_a" + std::to_string(b.id));
  for (const auto& br : branches_) {
    names.push_back("X_" + std::to_string(br.from) + "_" + std::to_string(br.to));
  }
  return names;
}

namespace {

struct ParamRef {
  char kind;  // 'T', 'D', 'X'
  int index;
};

ParamRef parse_param(const std::string& name, const std::vector<Bus>& buses,
                     const std::vector<Branch>& branches) {
  auto bus_index = [&](const std::string& s) {
    for (std::size_t i = 0; i < buses.size(); ++i) {
      if (std::to_string(buses[i].id) == s) return static_cast<int>(i);
    }
    return -1;
  };
  if (name.rfind("T_a", 0) == 0 || name.rfind("D_a", 0) == 0) {
    const int i = bus_index(name.substr(3));
    if (i >= 0) return {name[0], i};
  } else if (name.rfind("X_", 0) == 0) {
    for (std::size_t k = 0; k < branches.size(); ++k) {
      const auto& br = branches[k];
      if (name == "X_" + std::to_string(br.from) + "_" + std::to_string(br.to) ||
          name == "X_" + std::to_string(br.to) + "_" + std::to_string(br.from)) {
        return {'X', static_cast<int>(k)};
      }
    }
  }
  throw ConfigError(name, "unknown parameter");
}

}  // namespace

double MicrogridNetwork::parameter(const std::string& name) const {
  const ParamRef p = parse_param(name, buses_, branches_);
  if (p.kind == 'T') return buses_[p.index].T_a;
  if (p.kind == 'D') return buses_[p.index].D_a;
  return branches_[p.index].X;
}

MicrogridNetwork MicrogridNetwork::with_parameters(const std::map<std::string, double>& values) const {
  std::vector<Bus> buses = buses_;
  std::vector<Branch> branches = branches_;
  bool line_changed = false;
  for (const auto& [name, v] : values) {
    const ParamRef p = parse_param(name, buses_, branches_);
    if (p.kind == 'T') buses[p.index].T_a = v;
    if (p.kind == 'D') buses[p.index].D_a = v;
    if (p.kind == 'X') {
      line_changed = line_changed || branches[p.index].X != v;
      branches[p.index].X = v;
    }
  }
  if (line_changed) {
    const int si = index_.at(slack_);
    for (int i = 0; i < size(); ++i) {
      if (i != si) buses[i].delta_star.reset();
    }
  }
  return MicrogridNetwork(std::move(buses), std::move(branches), slack_);
}

StateSpace build_state_space(const MicrogridNetwork& net) {
  if (!net.lossless()) {
    throw LosslessRequiredError("state space needs lossless branches (R = 0 on every branch)");
  }
  const int n = net.size();
  const int m = static_cast<int>(net.edges().size());
  StateSpace ss;
  ss.A = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) ss.A(i, i) = -1.0 / net.buses()[i].T_a;
  ss.Bp = MatrixXd::Zero(n, m);
  ss.Cp = MatrixXd::Zero(m, n);
  ss.edge_offsets.resize(m);
  ss.edge_gains.resize(m);
  for (int j = 0; j < m; ++j) {
    const Edge& e = net.edges()[j];
    const Bus& bi = net.buses()[e.from];
    const Bus& bk = net.buses()[e.to];
    ss.Bp(e.from, j) = -bi.D_a * e.kappa / bi.T_a;
    ss.Bp(e.to, j) = bk.D_a * e.kappa / bk.T_a;
    ss.Cp(j, e.from) = 1.0;
    ss.Cp(j, e.to) = -1.0;
    ss.edge_offsets(j) = e.y_star;
    ss.edge_gains(j) = e.kappa;
  }
  return ss;
}

double sector_phi(double y, double y_star) { return std::sin(y + y_star) - std::sin(y_star); }

double sector_eta1(double y, double y_star) {
  const double u = y + y_star;
  return u - u * u * u / 6.0 - std::sin(y_star);
}

double sector_eta2(double y, double y_star) {
  const double u = y + y_star;
  return u - u * u * u / 10.0 - std::sin(y_star);
}

std::pair<double, double> sector_interval(double y_star) { return {-kPi - y_star, kPi - y_star}; }

SectorModel build_sector(const MicrogridNetwork& net, const StateSpace& ss) {
  SectorModel s;
  const int n = net.size();
  const int m = static_cast<int>(ss.Cp.rows());
  for (int i = 0; i < n; ++i) s.delta_vars.push_back(s.registry.add("d" + std::to_string(net.buses()[i].id)));
  for (int j = 0; j < m; ++j) s.phi_vars.push_back(s.registry.add("phi_e" + std::to_string(j + 1)));
  for (int j = 0; j < m; ++j) s.y_vars.push_back(s.registry.add("y_e" + std::to_string(j + 1)));
  s.r = PolyVector(m);
  s.a = PolyVector(m);
  for (int j = 0; j < m; ++j) {
    const double ys = ss.edge_offsets(j);
    const Polynomial y = Polynomial::var(s.y_vars[j]);
    const Polynomial u = y + ys;
    const Polynomial u3 = u * u * u;
    const Polynomial eta1 = u - (1.0 / 6.0) * u3 - std::sin(ys);
    const Polynomial eta2 = u - (1.0 / 10.0) * u3 - std::sin(ys);
    s.eta1.push_back(eta1);
    s.eta2.push_back(eta2);
    const Polynomial phi = Polynomial::var(s.phi_vars[j]);
    const Polynomial r_y = (phi - eta1) * (phi - eta2);
    const Polynomial a_y = (y + (kPi + ys)) * (y - (kPi - ys));
    const MatrixXd row = ss.Cp.row(j);
    s.r[j] = substitute_linear(r_y, {s.y_vars[j]}, row, s.delta_vars);
    s.a[j] = substitute_linear(a_y, {s.y_vars[j]}, row, s.delta_vars);
    s.intervals.push_back(sector_interval(ys));
  }
  return s;
}

VectorXd vector_field(const StateSpace& ss, const VectorXd& delta) {
  const VectorXd y = ss.Cp * delta;
  VectorXd phi(y.size());
  for (Eigen::Index j = 0; j < y.size(); ++j) phi(j) = sector_phi(y(j), ss.edge_offsets(j));
  return ss.A * delta + ss.Bp * phi;
}

VectorXd vector_field_unreduced(const MicrogridNetwork& net, const VectorXd& delta) {
  // Every directed edge (i,k) contributes −D_i/T_i · κ · φ(Δδ_i − Δδ_k) to bus i,
  // with y* taken in that orientation.
  const int n = net.size();
  VectorXd out(n);
  for (int i = 0; i < n; ++i) out(i) = -delta(i) / net.buses()[i].T_a;
  for (const auto& e : net.edges()) {
    for (int dir = 0; dir < 2; ++dir) {
      const int i = dir == 0 ? e.from : e.to;
      const int k = dir == 0 ? e.to : e.from;
      const double ys = net.delta_star()(i) - net.delta_star()(k);
      const Bus& b = net.buses()[i];
      out(i) += -b.D_a / b.T_a * e.kappa * sector_phi(delta(i) - delta(k), ys);
    }
  }
  return out;
}

MatrixXd origin_jacobian(const StateSpace& ss) {
  VectorXd c(ss.edge_offsets.size());
  for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = std::cos(ss.edge_offsets(j));
  return ss.A + ss.Bp * c.asDiagonal() * ss.Cp;
}

MicrogridNetwork island(const MicrogridNetwork& net, const std::set<int>& removed) {
  std::vector<Bus> buses;
  for (const auto& b : net.buses()) {
    if (!removed.count(b.id)) buses.push_back(b);
  }
  if (buses.empty()) throw TopologyError("islanding removes every bus", {});
  std::vector<Branch> branches;
  for (const auto& br : net.branches()) {
    if (!removed.count(br.from) && !removed.count(br.to)) branches.push_back(br);
  }
  // The pre-designed angles are kept; injections are re-derived on the
  // reduced network.
  for (auto& b : buses) b.P_star.reset();
  const int slack = removed.count(net.slack()) ? buses.front().id : net.slack();
  return MicrogridNetwork(std::move(buses), std::move(branches), slack);
}

VectorXd power_flow(const MicrogridNetwork& net, int slack) {
  return power_flow(net, slack, net.P_star(), net.delta_star()(net.index_of(slack)));
}

VectorXd power_flow(const MicrogridNetwork& net, int slack, const VectorXd& P, double slack_angle) {
  if (!net.lossless()) throw LosslessRequiredError("power flow needs lossless branches");
  if (P.size() != net.size()) throw DimensionError("power_flow: wrong injection vector length");
  return solve_angles(net.edges(), net.size(), net.index_of(slack), P, slack_angle);
}

MicrogridNetwork network_from_json(const nlohmann::json& j) {
  JsonReader root(j, "");
  root.require_schema_version();
  root.allow_keys({"schema_version", "buses", "branches", "slack", "name", "description"});
  std::vector<Bus> buses;
  for (const JsonReader& b : root.array("buses")) {
    b.allow_keys({"id", "T_a", "D_a", "V_star", "delta_star", "P_star"});
    Bus bus;
    bus.id = b.integer("id");
    bus.T_a = b.number("T_a");
    bus.D_a = b.number("D_a");
    bus.V_star = b.number("V_star");
    bus.delta_star = b.optional_number("delta_star");
    bus.P_star = b.optional_number("P_star");
    buses.push_back(bus);
  }
  std::vector<Branch> branches;
  if (root.has("branches")) {
    for (const JsonReader& b : root.array("branches")) {
      b.allow_keys({"from", "to", "R", "X"});
      Branch br;
      br.from = b.integer("from");
      br.to = b.integer("to");
      br.R = b.optional_number("R").value_or(0.0);
      br.X = b.number("X");
      branches.push_back(br);
    }
  }
  const int slack = root.has("slack") ? root.integer("slack") : 1;
  return MicrogridNetwork(std::move(buses), std::move(branches), slack);
}

MicrogridNetwork load_network(const std::string& path) { return network_from_json(read_json_file(path)); }

nlohmann::json to_json(const MicrogridNetwork& net) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["slack"] = net.slack();
  j["buses"] = nlohmann::json::array();
  for (const auto& b : net.buses()) {
    j["buses"].push_back({{"id", b.id},
                          {"T_a", b.T_a},
                          {"D_a", b.D_a},
                          {"V_star", b.V_star},
                          {"delta_star", b.delta_star.value_or(0.0)},
                          {"P_star", b.P_star.value_or(0.0)}});
  }
  j["branches"] = nlohmann::json::array();
  for (const auto& br : net.branches()) {
    j["branches"].push_back({{"from", br.from}, {"to", br.to}, {"R", br.R}, {"X", br.X}});
  }
  return j;
}

}  // namespace mgsos
