#pragma once

#include <random>
#include <vector>

#include "mgsos/certifier.hpp"
#include "mgsos/grid.hpp"
#include "mgsos/polynomial.hpp"
#include "mgsos/simulator.hpp"

namespace mgsos::testing {

/// The three-bus network left after MG 4 islands, with the original controls.
inline MicrogridNetwork three_bus(double T2 = -0.78, double D2 = -0.0178, double D3 = -0.0284) {
  std::vector<Bus> buses = {
      {1, 4.10, 0.0286, 1.00, 0.0, std::nullopt},
      {2, T2, D2, 1.05, -0.57, std::nullopt},
      {3, 2.56, D3, 0.95, -0.24, std::nullopt},
  };
  std::vector<Branch> branches = {{1, 2, 0.0, 0.45}, {1, 3, 0.0, 0.65}, {2, 3, 0.0, 0.66}};
  return MicrogridNetwork(buses, branches, 1);
}

inline MicrogridNetwork three_bus_suggested() { return three_bus(0.183, -0.015, -0.025); }

inline MicrogridNetwork single_bus(double T, double D = 0.0) {
  return MicrogridNetwork({{1, T, D, 1.0, 0.0, std::nullopt}}, {}, 1);
}

/// Random polynomial with `terms` monomials of degree ≤ deg.
inline Polynomial random_poly(std::mt19937_64& rng, const std::vector<VarId>& vars, unsigned deg,
                              int terms) {
  const auto basis = monomials_up_to(vars, deg);
  std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  Polynomial p;
  for (int i = 0; i < terms; ++i) p.add_term(basis[pick(rng)], coef(rng));
  return p;
}

/// Convex combination of `squares` squared dense polynomials of degree ≤ deg.
inline Polynomial random_sos(std::mt19937_64& rng, const std::vector<VarId>& vars, unsigned deg, int squares) {
  const auto basis = monomials_up_to(vars, deg);
  std::uniform_real_distribution<double> coef(-1.0, 1.0), weight(0.1, 1.0);
  std::vector<double> w(squares);
  double total = 0.0;
  for (auto& x : w) total += (x = weight(rng));
  Polynomial p;
  for (int k = 0; k < squares; ++k) {
    Polynomial q;
    for (const auto& m : basis) q.add_term(m, coef(rng));
    p += (w[k] / total) * q * q;
  }
  return p;
}

inline std::vector<double> random_point(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

inline CertifierConfig degrees(int v, int s1, int s2, int g1, int g2) {
  CertifierConfig c;
  c.l_V = v;
  c.l_s1 = s1;
  c.l_s2 = s2;
  c.l_sigma1 = g1;
  c.l_sigma2 = g2;
  return c;
}

/// Random state with every edge difference inside its sector interval.
inline Eigen::VectorXd sample_domain(const CertifyReport& rep, const StateSpace& ss, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (;;) {
    Eigen::VectorXd d(ss.A.rows());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = u(rng);
    const Eigen::VectorXd y = ss.Cp * d;
    bool ok = true;
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      ok = ok && y(j) >= rep.domain[j].first && y(j) <= rep.domain[j].second;
    }
    if (ok && d.norm() > 1e-3) return d;
  }
}

inline double evaluate_V(const CertifyReport& rep, const Eigen::VectorXd& d) {
  std::vector<double> pt(rep.registry.size(), 0.0);
  for (std::size_t i = 0; i < rep.delta_vars.size(); ++i) pt[rep.delta_vars[i]] = d(i);
  return rep.V.evaluate(pt);
}

struct Instance {
  MicrogridNetwork net;
  CertifierConfig cfg;
};

inline std::vector<Instance> corpus() {
  std::vector<Instance> out;
  for (double T : {0.5, 1.0, 4.1}) {
    out.push_back({single_bus(T), degrees(2, 2, 2, 2, 2)});
    out.push_back({single_bus(T), degrees(4, 2, 2, 4, 4)});
  }
  out.push_back({single_bus(-1.0), degrees(2, 2, 2, 2, 2)});
  std::vector<Bus> two = {{1, 2.0, 0.05, 1.0, 0.0, {}}, {2, 1.5, 0.05, 1.0, -0.2, {}}};
  out.push_back({MicrogridNetwork(two, {{1, 2, 0, 0.5}}), degrees(2, 2, 2, 2, 2)});
  out.push_back({three_bus_suggested(), degrees(2, 0, 0, 2, 2)});
  return out;
}


/// Independent checks of a ζ=1 verdict: origin Jacobian, sampled Lyapunov
/// decrease, and simulated convergence with V non-increasing. Returns the
/// number of violations.
inline int soundness_violations(const MicrogridNetwork& net, const CertifyReport& rep, std::mt19937_64& rng) {
  int bad = 0;
  const StateSpace ss = build_state_space(net);
  Eigen::EigenSolver<Eigen::MatrixXd> es(origin_jacobian(ss), false);
  bad += es.eigenvalues().real().maxCoeff() >= 1e-9;
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd d = sample_domain(rep, ss, rng, 3.0);
    bad += !(lyapunov_derivative(rep, ss, d) < 1e-9);
    bad += !(evaluate_V(rep, d) > 0.0);
  }
  for (int k = 0; k < 100; ++k) {
    SimConfig sc;
    sc.initial_delta = sample_domain(rep, ss, rng, 1.0);
    sc.t_end = 60.0;
    sc.dt = 1e-2;
    const Trajectory tr = simulate(ss, sc);
    bad += tr.classification != Classification::Converged;
    for (Eigen::Index s = 1; s < tr.states.rows(); ++s) {
      const double v0 = evaluate_V(rep, tr.states.row(s - 1).transpose());
      const double v1 = evaluate_V(rep, tr.states.row(s).transpose());
      if (v1 > v0 + 1e-6) {
        ++bad;
        break;
      }
    }
  }
  return bad;
}

}  // namespace mgsos::testing
