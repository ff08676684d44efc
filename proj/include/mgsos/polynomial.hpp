#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace mgsos {

using VarId = std::uint32_t;

/// Coefficients with magnitude below this are dropped after every operation.
inline constexpr double kCanonicalThreshold = 1e-14;

/// Maps dense variable ids to display names.
class VariableRegistry {
 public:
  /// Returns the id of `name`, creating it if needed.
  VarId add(const std::string& name);
  std::optional<VarId> find(const std::string& name) const;
  const std::string& name(VarId id) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
  std::map<std::string, VarId> ids_;
};

/// Product of variable powers, stored as (var, exponent) pairs sorted by var
/// with no zero exponents.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<VarId, unsigned>> powers);
  static Monomial var(VarId v, unsigned power = 1);

  unsigned degree() const { return degree_; }
  unsigned exponent(VarId v) const;
  bool is_constant() const { return powers_.empty(); }
  const std::vector<std::pair<VarId, unsigned>>& powers() const { return powers_; }

  Monomial operator*(const Monomial& other) const;
  bool operator==(const Monomial& other) const { return powers_ == other.powers_; }

  double evaluate(std::span<const double> point) const;

 private:
  std::vector<std::pair<VarId, unsigned>> powers_;
  unsigned degree_ = 0;
};

/// Graded lexicographic order: lower total degree first; within a degree the
/// larger exponent of the lowest-numbered variable comes first (x² < xy < y²).
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

/// Sparse real polynomial in canonical form.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GradedLex>;

  Polynomial() = default;
  Polynomial(double c);  // NOLINT: constants convert implicitly
  Polynomial(const Monomial& m, double c = 1.0);
  static Polynomial var(VarId v) { return Polynomial(Monomial::var(v)); }

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;
  double coefficient(const Monomial& m) const;
  std::set<VarId> variables() const;

  /// Adds c·m in place and re-canonicalizes that term.
  void add_term(const Monomial& m, double c);

  Polynomial& operator+=(const Polynomial& q);
  Polynomial& operator-=(const Polynomial& q);
  Polynomial& operator*=(double s);
  Polynomial operator-() const;

  double evaluate(std::span<const double> point) const;
  Polynomial derivative(VarId v) const;

 private:
  TermMap terms_;
};

Polynomial operator+(const Polynomial& p, const Polynomial& q);
Polynomial operator-(const Polynomial& p, const Polynomial& q);
Polynomial operator*(const Polynomial& p, const Polynomial& q);
Polynomial operator*(double s, const Polynomial& p);

/// Fixed-length list of polynomials.
class PolyVector {
 public:
  PolyVector() = default;
  explicit PolyVector(std::size_t n) : entries_(n) {}
  explicit PolyVector(std::vector<Polynomial> entries) : entries_(std::move(entries)) {}

  std::size_t size() const { return entries_.size(); }
  const Polynomial& operator[](std::size_t i) const { return entries_.at(i); }
  Polynomial& operator[](std::size_t i) { return entries_.at(i); }
  const std::vector<Polynomial>& entries() const { return entries_; }

 private:
  std::vector<Polynomial> entries_;
};

Polynomial add(const Polynomial& p, const Polynomial& q);
Polynomial mul(const Polynomial& p, const Polynomial& q);
PolyVector gradient(const Polynomial& p, const std::vector<VarId>& vars);
double evaluate(const Polynomial& p, std::span<const double> point);

/// Returns p(M·δ): y_vars[i] is replaced by Σ_k M(i,k)·delta_vars[k].
Polynomial substitute_linear(const Polynomial& p, const std::vector<VarId>& y_vars,
                             const Eigen::MatrixXd& M, const std::vector<VarId>& delta_vars);

/// Every monomial in `vars` with degree in [min_degree, max_degree], in
/// graded-lex order.
std::vector<Monomial> monomials_up_to(const std::vector<VarId>& vars, unsigned max_degree,
                                      unsigned min_degree = 0);

std::string to_string(const Polynomial& p, const VariableRegistry& reg);

nlohmann::json to_json(const Polynomial& p, const VariableRegistry& reg);
/// Unknown variable names are added to `reg`.
Polynomial polynomial_from_json(const nlohmann::json& j, VariableRegistry& reg);

}  // namespace mgsos
