#include "mgsos/sos_program.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "mgsos/error.hpp"

namespace mgsos {

AffinePoly::AffinePoly(Polynomial constant) : constant_(std::move(constant)) {}

AffinePoly AffinePoly::decision(int id, const Polynomial& p) {
  AffinePoly a;
  if (!p.is_zero()) a.linear_[id] = p;
  return a;
}

unsigned AffinePoly::degree() const {
  unsigned d = constant_.degree();
  for (const auto& [k, p] : linear_) d = std::max(d, p.degree());
  return d;
}

std::set<VarId> AffinePoly::variables() const {
  std::set<VarId> v = constant_.variables();
  for (const auto& [k, p] : linear_) {
    auto w = p.variables();
    v.insert(w.begin(), w.end());
  }
  return v;
}

std::set<Monomial, GradedLex> AffinePoly::support() const {
  std::set<Monomial, GradedLex> s;
  for (const auto& [m, c] : constant_.terms()) s.insert(m);
  for (const auto& [k, p] : linear_) {
    for (const auto& [m, c] : p.terms()) s.insert(m);
  }
  return s;
}

Polynomial AffinePoly::resolve(const Eigen::VectorXd& x) const {
  Polynomial out = constant_;
  for (const auto& [k, p] : linear_) {
    if (k >= x.size()) throw DimensionError("resolve: decision vector too short");
    out += x(k) * p;
  }
  return out;
}

AffinePoly& AffinePoly::operator+=(const AffinePoly& q) {
  constant_ += q.constant_;
  for (const auto& [k, p] : q.linear_) {
    auto& dst = linear_[k];
    dst += p;
    if (dst.is_zero()) linear_.erase(k);
  }
  return *this;
}

AffinePoly& AffinePoly::operator-=(const AffinePoly& q) { return *this += -q; }

AffinePoly AffinePoly::operator-() const {
  AffinePoly a;
  a.constant_ = -constant_;
  for (const auto& [k, p] : linear_) a.linear_[k] = -p;
  return a;
}

AffinePoly operator+(AffinePoly p, const AffinePoly& q) { return p += q; }
AffinePoly operator-(AffinePoly p, const AffinePoly& q) { return p -= q; }

AffinePoly operator*(const Polynomial& p, const AffinePoly& q) {
  AffinePoly out(p * q.constant());
  for (const auto& [k, l] : q.linear()) out += AffinePoly::decision(k, p * l);
  return out;
}

AffinePoly operator*(const AffinePoly& q, const Polynomial& p) { return p * q; }

unsigned DecisionPoly::degree_bound() const {
  unsigned d = 0;
  for (const auto& m : basis) d = std::max(d, m.degree());
  return d;
}

AffinePoly DecisionPoly::expr() const {
  AffinePoly a;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    a += AffinePoly::decision(coeff_ids[k], Polynomial(basis[k]));
  }
  return a;
}

Polynomial DecisionPoly::resolve(const Eigen::VectorXd& x) const {
  Polynomial p;
  for (std::size_t k = 0; k < basis.size(); ++k) p.add_term(basis[k], x(coeff_ids[k]));
  return p;
}

DecisionPoly SosProgram::declare_poly(const std::vector<VarId>& vars, unsigned degree_bound,
                                      Parity parity, bool vanish_at_origin) {
  std::vector<Monomial> basis;
  for (auto& m : monomials_up_to(vars, degree_bound)) {
    if (vanish_at_origin && m.is_constant()) continue;
    if (parity == Parity::EvenOnly && m.degree() % 2 != 0) continue;
    basis.push_back(std::move(m));
  }
  if (basis.empty()) throw ProblemError("declare_poly: empty monomial basis");
  return declare_poly_with_basis(vars, std::move(basis));
}

DecisionPoly SosProgram::declare_poly_with_basis(const std::vector<VarId>& vars,
                                                 std::vector<Monomial> basis) {
  if (basis.empty()) throw ProblemError("declare_poly: empty monomial basis");
  DecisionPoly d;
  d.variables = vars;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (basis[i] == basis[j]) throw ProblemError("declare_poly: duplicate basis monomial");
    }
  }
  d.basis = std::move(basis);
  for (std::size_t k = 0; k < d.basis.size(); ++k) d.coeff_ids.push_back(new_decision());
  decisions_.push_back(d);
  return d;
}

int SosProgram::add_sos_constraint(const AffinePoly& expression) {
  SosConstraint c;
  c.expression = expression;
  const unsigned deg = expression.degree();
  const std::set<VarId> vs = expression.variables();
  c.gram_basis = monomials_up_to(std::vector<VarId>(vs.begin(), vs.end()), (deg + 1) / 2);

  // An odd top degree carried only by the constant part cannot be matched.
  unsigned dec_deg = 0;
  bool any_dec = false;
  for (const auto& [k, p] : expression.linear()) {
    dec_deg = std::max(dec_deg, p.degree());
    any_dec = true;
  }
  const unsigned cdeg = expression.constant().degree();
  if (!infeasible_ && !expression.constant().is_zero() && cdeg % 2 == 1 &&
      (!any_dec || dec_deg < cdeg)) {
    infeasible_ = "SOS constraint " + std::to_string(constraints_.size()) +
                  " has odd leading degree " + std::to_string(cdeg);
  }
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

void SosProgram::add_equality(const AffinePoly& expression) { equalities_.push_back(expression); }

SdpProblem SosProgram::compile() const {
  if (constraints_.empty()) throw ProblemError("compile: program has no SOS constraint");
  SdpProblem p;
  p.num_free = num_decisions_;
  for (std::size_t ci = 0; ci < constraints_.size(); ++ci) {
    const auto& c = constraints_[ci];
    const auto& z = c.gram_basis;
    p.block_sizes.push_back(static_cast<int>(z.size()));
    std::map<Monomial, SdpConstraint, GradedLex> rows;
    for (std::size_t i = 0; i < z.size(); ++i) {
      for (std::size_t j = i; j < z.size(); ++j) {
        rows[z[i] * z[j]].entries.push_back(
            {static_cast<int>(ci), static_cast<int>(i), static_cast<int>(j), i == j ? 1.0 : 2.0});
      }
    }
    for (const auto& m : c.expression.support()) {
      auto& row = rows[m];
      row.rhs = c.expression.constant().coefficient(m);
      for (const auto& [k, poly] : c.expression.linear()) {
        const double g = poly.coefficient(m);
        if (g != 0.0) row.free_terms.push_back({k, -g});
      }
    }
    for (auto& [m, row] : rows) p.constraints.push_back(std::move(row));
  }
  for (const auto& e : equalities_) {
    for (const auto& m : e.support()) {
      SdpConstraint row;
      row.rhs = -e.constant().coefficient(m);
      for (const auto& [k, poly] : e.linear()) {
        const double g = poly.coefficient(m);
        if (g != 0.0) row.free_terms.push_back({k, g});
      }
      p.constraints.push_back(std::move(row));
    }
  }
  return p;
}

Polynomial gram_polynomial(const std::vector<Monomial>& basis, const Eigen::MatrixXd& Q) {
  Polynomial out;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    for (std::size_t j = i; j < basis.size(); ++j) {
      const double c = i == j ? Q(i, i) : Q(i, j) + Q(j, i);
      out.add_term(basis[i] * basis[j], c);
    }
  }
  return out;
}

SosCertificate SosProgram::extract_certificate(const SdpOutcome& outcome) const {
  if (outcome.verdict != Verdict::Feasible || !outcome.witness) {
    throw CertificateError("extract_certificate: outcome is not Feasible");
  }
  const auto& w = *outcome.witness;
  if (w.blocks.size() != constraints_.size() || w.free.size() != num_decisions_) {
    throw CertificateError("extract_certificate: witness does not match the program");
  }
  Eigen::VectorXd x = w.free;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) < 1e-10) x(i) = 0.0;
  }
  SosCertificate cert;
  for (const auto& d : decisions_) cert.decisions.push_back(d.resolve(x));
  cert.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < constraints_.size(); ++ci) {
    const auto& Q = w.blocks[ci];
    cert.min_eigenvalue = std::min(cert.min_eigenvalue, eigen_min(Q));
    const Polynomial diff = constraints_[ci].expression.resolve(x) -
                            gram_polynomial(constraints_[ci].gram_basis, Q);
    for (const auto& [m, c] : diff.terms()) cert.residual = std::max(cert.residual, std::abs(c));
    cert.gram.push_back(Q);
    cert.gram_bases.push_back(constraints_[ci].gram_basis);
  }
  for (const auto& e : equalities_) {
    for (const auto& [m, c] : e.resolve(x).terms()) {
      cert.residual = std::max(cert.residual, std::abs(c));
    }
  }
  if (cert.min_eigenvalue < -1e-7) {
    throw CertificateError("Gram matrix has eigenvalue " + std::to_string(cert.min_eigenvalue));
  }
  if (cert.residual > 1e-6) {
    throw CertificateError("reconstruction residual " + std::to_string(cert.residual));
  }
  return cert;
}

SosResult SosProgram::solve(const SdpSettings& settings) const {
  SosResult r;
  if (infeasible_) {
    r.verdict = Verdict::Infeasible;
    r.outcome.verdict = Verdict::Infeasible;
    r.outcome.margin = -std::numeric_limits<double>::infinity();
    r.outcome.status = "compile: " + *infeasible_;
    r.note = *infeasible_;
    return r;
  }
  r.outcome = solve_feasibility(compile(), settings);
  r.verdict = r.outcome.verdict;
  if (r.verdict == Verdict::Feasible) {
    try {
      r.certificate = extract_certificate(r.outcome);
    } catch (const CertificateError& e) {
      r.verdict = Verdict::Unknown;
      r.note = e.what();
    }
  }
  return r;
}

nlohmann::json to_json(const SosCertificate& cert, const VariableRegistry& reg) {
  nlohmann::json j;
  j["decisions"] = nlohmann::json::array();
  for (const auto& p : cert.decisions) j["decisions"].push_back(to_json(p, reg));
  j["gram"] = nlohmann::json::array();
  for (std::size_t i = 0; i < cert.gram.size(); ++i) {
    nlohmann::json g;
    nlohmann::json basis = nlohmann::json::array();
    for (const auto& m : cert.gram_bases[i]) basis.push_back(to_json(Polynomial(m), reg)[0]["exponents"]);
    g["basis"] = basis;
    const auto& Q = cert.gram[i];
    g["rows"] = Q.rows();
    std::vector<double> data;
    for (Eigen::Index r = 0; r < Q.rows(); ++r) {
      for (Eigen::Index c = 0; c < Q.cols(); ++c) data.push_back(Q(r, c));
    }
    g["data"] = data;
    j["gram"].push_back(g);
  }
  j["residual"] = cert.residual;
  j["min_eigenvalue"] = cert.min_eigenvalue;
  return j;
}

}  // namespace mgsos
