#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgsos/polynomial.hpp"
#include "mgsos/sdp.hpp"

namespace mgsos {

/// Polynomial whose coefficients are affine in the program's decision scalars:
/// constant() + Σ_k x_k · linear().at(k).
class AffinePoly {
 public:
  AffinePoly() = default;
  AffinePoly(Polynomial constant);  // NOLINT
  static AffinePoly decision(int id, const Polynomial& p);

  const Polynomial& constant() const { return constant_; }
  const std::map<int, Polynomial>& linear() const { return linear_; }

  unsigned degree() const;
  std::set<VarId> variables() const;
  std::set<Monomial, GradedLex> support() const;
  /// Substitutes decision values.
  Polynomial resolve(const Eigen::VectorXd& x) const;

  AffinePoly& operator+=(const AffinePoly& q);
  AffinePoly& operator-=(const AffinePoly& q);
  AffinePoly operator-() const;

 private:
  Polynomial constant_;
  std::map<int, Polynomial> linear_;
};

AffinePoly operator+(AffinePoly p, const AffinePoly& q);
AffinePoly operator-(AffinePoly p, const AffinePoly& q);
AffinePoly operator*(const Polynomial& p, const AffinePoly& q);
AffinePoly operator*(const AffinePoly& q, const Polynomial& p);

enum class Parity { All, EvenOnly };

/// Unknown polynomial Σ_k x_{coeff_ids[k]} · basis[k].
struct DecisionPoly {
  std::vector<VarId> variables;
  std::vector<Monomial> basis;
  std::vector<int> coeff_ids;

  unsigned degree_bound() const;
  AffinePoly expr() const;
  Polynomial resolve(const Eigen::VectorXd& x) const;
};

struct SosConstraint {
  AffinePoly expression;
  std::vector<Monomial> gram_basis;
};

struct SosCertificate {
  std::vector<Polynomial> decisions;
  std::vector<Eigen::MatrixXd> gram;
  std::vector<std::vector<Monomial>> gram_bases;
  /// Max coefficient of |expression − zᵀQz| over all constraints.
  double residual = 0.0;
  double min_eigenvalue = 0.0;
};

struct SosResult {
  Verdict verdict = Verdict::Unknown;
  SdpOutcome outcome;
  std::optional<SosCertificate> certificate;
  std::string note;
};

class SosProgram {
 public:
  VariableRegistry& registry() { return registry_; }
  const VariableRegistry& registry() const { return registry_; }

  /// Full monomial basis up to `degree_bound`, filtered by parity and by
  /// dropping the constant when `vanish_at_origin`.
  DecisionPoly declare_poly(const std::vector<VarId>& vars, unsigned degree_bound,
                            Parity parity = Parity::All, bool vanish_at_origin = false);
  DecisionPoly declare_poly_with_basis(const std::vector<VarId>& vars,
                                       std::vector<Monomial> basis);

  /// Gram basis: every monomial of degree ≤ ⌈deg/2⌉ in the expression's
  /// variables.
  int add_sos_constraint(const AffinePoly& expression);
  /// expression ≡ 0 coefficient-wise.
  void add_equality(const AffinePoly& expression);

  int num_decisions() const { return num_decisions_; }
  const std::vector<DecisionPoly>& decision_polys() const { return decisions_; }
  const std::vector<SosConstraint>& constraints() const { return constraints_; }
  /// Set when an SOS constraint has an odd leading degree no decision term
  /// can cancel.
  const std::optional<std::string>& compile_infeasibility() const { return infeasible_; }

  SdpProblem compile() const;
  /// Throws CertificateError if the witness fails re-validation.
  SosCertificate extract_certificate(const SdpOutcome& outcome) const;
  SosResult solve(const SdpSettings& settings = {}) const;

 private:
  int new_decision() { return num_decisions_++; }

  VariableRegistry registry_;
  int num_decisions_ = 0;
  std::vector<DecisionPoly> decisions_;
  std::vector<SosConstraint> constraints_;
  std::vector<AffinePoly> equalities_;
  std::optional<std::string> infeasible_;
};

/// zᵀQz as a polynomial.
Polynomial gram_polynomial(const std::vector<Monomial>& basis, const Eigen::MatrixXd& Q);

nlohmann::json to_json(const SosCertificate& cert, const VariableRegistry& reg);

}  // namespace mgsos
