#include "mgsos/certifier.hpp"

#include <chrono>
#include <cmath>

#include "mgsos/error.hpp"
#include "mgsos/json_util.hpp"

namespace mgsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void CertifierConfig::validate() const {
  if (l_V < 2 || l_V % 2 != 0) throw ConfigError("degrees.l_V", "must be even and at least 2");
  if (l_s1 < 0 || l_s1 % 2 != 0) throw ConfigError("degrees.l_s1", "must be even and non-negative");
  if (l_s2 < 0 || l_s2 % 2 != 0) throw ConfigError("degrees.l_s2", "must be even and non-negative");
  if (l_sigma1 < 1) throw ConfigError("degrees.l_sigma1", "must be positive");
  if (l_sigma2 < 1) throw ConfigError("degrees.l_sigma2", "must be positive");
  if (!(epsilon_sigma > 0.0)) throw ConfigError("degrees.epsilon_sigma", "must be positive");
}

namespace {

Polynomial strict_pd(const std::vector<VarId>& vars, int degree, double eps) {
  Polynomial p;
  for (VarId v : vars) {
    p.add_term(Monomial::var(v, 2), eps);
    p.add_term(Monomial::var(v, static_cast<unsigned>(degree)), eps);
  }
  return p;
}

}  // namespace

CertifyReport assess(const MicrogridNetwork& net, const CertifierConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const StateSpace ss = build_state_space(net);
  SectorModel sector = build_sector(net, ss);

  CertifyReport rep;
  rep.registry = sector.registry;
  rep.delta_vars = sector.delta_vars;
  rep.phi_vars = sector.phi_vars;
  rep.domain = sector.intervals;
  auto finish = [&]() {
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };

  const int n = net.size();
  const int m = static_cast<int>(ss.Cp.rows());
  Eigen::EigenSolver<MatrixXd> es(origin_jacobian(ss), false);
  rep.jacobian_max_real = es.eigenvalues().real().maxCoeff();

  SosProgram prog;
  prog.registry() = sector.registry;
  const auto& dv = sector.delta_vars;
  const auto& pv = sector.phi_vars;
  std::vector<VarId> all_vars = dv;
  all_vars.insert(all_vars.end(), pv.begin(), pv.end());

  const DecisionPoly V = prog.declare_poly(dv, cfg.l_V, Parity::All, true);
  const Polynomial sigma1 = strict_pd(dv, cfg.sigma1_degree(), cfg.epsilon_sigma);
  const Polynomial sigma2 = strict_pd(dv, cfg.sigma2_degree(), cfg.epsilon_sigma);
  prog.add_sos_constraint(V.expr() - AffinePoly(sigma1));

  // f = Aδ + B′φ as polynomials.
  std::vector<Polynomial> f(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) f[i].add_term(Monomial::var(dv[k]), ss.A(i, k));
    for (int j = 0; j < m; ++j) f[i].add_term(Monomial::var(pv[j]), ss.Bp(i, j));
  }
  AffinePoly E = AffinePoly(-sigma2);
  for (std::size_t b = 0; b < V.basis.size(); ++b) {
    Polynomial vdot;
    const Polynomial mono(V.basis[b]);
    for (int i = 0; i < n; ++i) vdot += mono.derivative(dv[i]) * f[i];
    E += AffinePoly::decision(V.coeff_ids[b], -vdot);
  }

  // A multiplier's value at the origin must vanish whenever its partner is
  // strictly negative there (E(0) = Σ s(0)·r(0) ≥ 0), so the constant
  // monomial is dropped in that case.
  std::vector<DecisionPoly> s1, s2;
  for (int j = 0; j < m; ++j) {
    const bool r_neg = sector.r[j].coefficient(Monomial()) < 0.0;
    s1.push_back(prog.declare_poly(all_vars, cfg.l_s1, Parity::All, r_neg && cfg.l_s1 > 0));
    for (std::size_t b = 0; b < s1[j].basis.size(); ++b) {
      E += AffinePoly::decision(s1[j].coeff_ids[b], Polynomial(s1[j].basis[b]) * sector.r[j]);
    }
    const bool a_neg = sector.a[j].coefficient(Monomial()) < 0.0;
    s2.push_back(prog.declare_poly(dv, cfg.l_s2, Parity::All, a_neg && cfg.l_s2 > 0));
    for (std::size_t b = 0; b < s2[j].basis.size(); ++b) {
      E += AffinePoly::decision(s2[j].coeff_ids[b], Polynomial(s2[j].basis[b]) * sector.a[j]);
    }
  }
  prog.add_sos_constraint(E);
  for (int j = 0; j < m; ++j) {
    prog.add_sos_constraint(s1[j].expr());
    prog.add_sos_constraint(s2[j].expr());
  }
  if (prog.compile_infeasibility()) {
    throw ConfigError("degrees", "unmatchable odd degree: " + *prog.compile_infeasibility());
  }

  const SdpProblem sdp = prog.compile();
  rep.problem_stats.num_blocks = static_cast<int>(sdp.block_sizes.size());
  rep.problem_stats.num_equalities = static_cast<int>(sdp.constraints.size());
  rep.problem_stats.num_decisions = sdp.num_free;
  rep.problem_stats.gram_sizes = sdp.block_sizes;

  if (cfg.jacobian_prescreen && rep.jacobian_max_real >= 0.0) {
    rep.sdp_verdict = Verdict::Infeasible;
    rep.note = "origin Jacobian has an eigenvalue with non-negative real part";
    return finish();
  }

  rep.solved = true;
  const SdpOutcome out = solve_feasibility(sdp, cfg.sdp);
  rep.sdp_verdict = out.verdict;
  rep.margin = out.margin;
  rep.iterations = out.iterations;
  rep.note = out.status;
  if (out.verdict == Verdict::Feasible) {
    try {
      rep.certificate = prog.extract_certificate(out);
      Eigen::VectorXd x = out.witness->free;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(x(i)) < 1e-10) x(i) = 0.0;
      }
      rep.V = V.resolve(x);
      for (const auto& s : s1) rep.s1.push_back(s.resolve(x));
      for (const auto& s : s2) rep.s2.push_back(s.resolve(x));
      rep.zeta = 1;
    } catch (const CertificateError& e) {
      rep.sdp_verdict = Verdict::Unknown;
      rep.note = std::string("certificate rejected: ") + e.what();
    }
  }
  return finish();
}

double lyapunov_derivative(const CertifyReport& report, const StateSpace& ss, const VectorXd& delta) {
  std::vector<double> point(report.registry.size(), 0.0);
  for (std::size_t i = 0; i < report.delta_vars.size(); ++i) point[report.delta_vars[i]] = delta(i);
  const VectorXd f = vector_field(ss, delta);
  double v = 0.0;
  for (std::size_t i = 0; i < report.delta_vars.size(); ++i) {
    v += report.V.derivative(report.delta_vars[i]).evaluate(point) * f(i);
  }
  return v;
}

nlohmann::json to_json(const CertifierConfig& c) {
  return {{"l_V", c.l_V},           {"l_s1", c.l_s1},
          {"l_s2", c.l_s2},         {"l_sigma1", c.l_sigma1},
          {"l_sigma2", c.l_sigma2}, {"l_sigma1_used", c.sigma1_degree()},
          {"l_sigma2_used", c.sigma2_degree()}, {"epsilon_sigma", c.epsilon_sigma},
          {"jacobian_prescreen", c.jacobian_prescreen}};
}

CertifierConfig degrees_from_json(const nlohmann::json& j, const std::string& path,
                                  CertifierConfig base) {
  JsonReader r(j, path);
  r.allow_keys({"l_V", "l_s1", "l_s2", "l_sigma1", "l_sigma2", "epsilon_sigma", "jacobian_prescreen"});
  if (r.has("l_V")) base.l_V = r.integer("l_V");
  if (r.has("l_s1")) base.l_s1 = r.integer("l_s1");
  if (r.has("l_s2")) base.l_s2 = r.integer("l_s2");
  if (r.has("l_sigma1")) base.l_sigma1 = r.integer("l_sigma1");
  if (r.has("l_sigma2")) base.l_sigma2 = r.integer("l_sigma2");
  if (r.has("epsilon_sigma")) base.epsilon_sigma = r.number("epsilon_sigma");
  if (r.has("jacobian_prescreen")) {
    if (!j.at("jacobian_prescreen").is_boolean()) {
      throw ConfigError(path + ".jacobian_prescreen", "expected a boolean");
    }
    base.jacobian_prescreen = j.at("jacobian_prescreen").get<bool>();
  }
  return base;
}

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const CertifyReport& r) {
  nlohmann::json j;
  j["zeta"] = r.zeta;
  j["sdp_verdict"] = to_string(r.sdp_verdict);
  j["margin"] = finite_or_null(r.margin);
  j["iterations"] = r.iterations;
  j["solved"] = r.solved;
  j["note"] = r.note;
  j["jacobian_max_real"] = r.jacobian_max_real;
  j["problem_stats"] = {{"num_blocks", r.problem_stats.num_blocks},
                        {"num_equalities", r.problem_stats.num_equalities},
                        {"num_decisions", r.problem_stats.num_decisions},
                        {"gram_sizes", r.problem_stats.gram_sizes}};
  j["domain"] = nlohmann::json::array();
  for (const auto& [lo, hi] : r.domain) j["domain"].push_back({lo, hi});
  if (r.certificate) {
    nlohmann::json c;
    c["V"] = to_json(r.V, r.registry);
    c["s1"] = nlohmann::json::array();
    for (const auto& p : r.s1) c["s1"].push_back(to_json(p, r.registry));
    c["s2"] = nlohmann::json::array();
    for (const auto& p : r.s2) c["s2"].push_back(to_json(p, r.registry));
    c["sos"] = to_json(*r.certificate, r.registry);
    j["certificate"] = c;
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

}  // namespace mgsos
