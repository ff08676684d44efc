#include "mgsos/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "mgsos/error.hpp"

namespace mgsos {

VarId VariableRegistry::add(const std::string& name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<VarId>(names_.size());
  names_.push_back(name);
  ids_.emplace(name, id);
  return id;
}

std::optional<VarId> VariableRegistry::find(const std::string& name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& VariableRegistry::name(VarId id) const {
  if (id >= names_.size()) throw DimensionError("unknown variable id " + std::to_string(id));
  return names_[id];
}

Monomial::Monomial(std::vector<std::pair<VarId, unsigned>> powers) {
  std::sort(powers.begin(), powers.end());
  for (const auto& [v, e] : powers) {
    if (e == 0) continue;
    if (!powers_.empty() && powers_.back().first == v) {
      powers_.back().second += e;
    } else {
      powers_.emplace_back(v, e);
    }
    degree_ += e;
  }
}

Monomial Monomial::var(VarId v, unsigned power) { return Monomial({{v, power}}); }

unsigned Monomial::exponent(VarId v) const {
  for (const auto& [w, e] : powers_) {
    if (w == v) return e;
    if (w > v) break;
  }
  return 0;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.powers_.reserve(powers_.size() + other.powers_.size());
  auto a = powers_.begin();
  auto b = other.powers_.begin();
  while (a != powers_.end() || b != other.powers_.end()) {
    if (b == other.powers_.end() || (a != powers_.end() && a->first < b->first)) {
      out.powers_.push_back(*a++);
    } else if (a == powers_.end() || b->first < a->first) {
      out.powers_.push_back(*b++);
    } else {
      out.powers_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  out.degree_ = degree_ + other.degree_;
  return out;
}

double Monomial::evaluate(std::span<const double> point) const {
  double v = 1.0;
  for (const auto& [w, e] : powers_) {
    if (w >= point.size()) {
      throw EvaluationError("no value for variable id " + std::to_string(w));
    }
    const double x = point[w];
    for (unsigned k = 0; k < e; ++k) v *= x;
  }
  return v;
}

bool GradedLex::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  const auto& pa = a.powers();
  const auto& pb = b.powers();
  std::size_t i = 0, j = 0;
  while (i < pa.size() || j < pb.size()) {
    // The lowest variable present in either monomial decides.
    VarId va = i < pa.size() ? pa[i].first : ~VarId{0};
    VarId vb = j < pb.size() ? pb[j].first : ~VarId{0};
    VarId v = std::min(va, vb);
    unsigned ea = va == v ? pa[i].second : 0;
    unsigned eb = vb == v ? pb[j].second : 0;
    if (ea != eb) return ea > eb;
    if (va == v) ++i;
    if (vb == v) ++j;
  }
  return false;
}

Polynomial::Polynomial(double c) {
  if (std::abs(c) >= kCanonicalThreshold) terms_.emplace(Monomial(), c);
}

Polynomial::Polynomial(const Monomial& m, double c) {
  if (std::abs(c) >= kCanonicalThreshold) terms_.emplace(m, c);
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

std::set<VarId> Polynomial::variables() const {
  std::set<VarId> out;
  for (const auto& [m, c] : terms_) {
    for (const auto& [v, e] : m.powers()) out.insert(v);
  }
  return out;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) it->second += c;
  if (std::abs(it->second) < kCanonicalThreshold) terms_.erase(it);
}

Polynomial& Polynomial::operator+=(const Polynomial& q) {
  for (const auto& [m, c] : q.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& q) {
  for (const auto& [m, c] : q.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    it->second *= s;
    if (std::abs(it->second) < kCanonicalThreshold) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

Polynomial Polynomial::operator-() const {
  Polynomial out = *this;
  for (auto& [m, c] : out.terms_) c = -c;
  return out;
}

double Polynomial::evaluate(std::span<const double> point) const {
  double v = 0.0;
  for (const auto& [m, c] : terms_) v += c * m.evaluate(point);
  return v;
}

Polynomial Polynomial::derivative(VarId v) const {
  Polynomial out;
  for (const auto& [m, c] : terms_) {
    const unsigned e = m.exponent(v);
    if (e == 0) continue;
    std::vector<std::pair<VarId, unsigned>> powers = m.powers();
    for (auto& [w, f] : powers) {
      if (w == v) f -= 1;
    }
    out.add_term(Monomial(std::move(powers)), c * e);
  }
  return out;
}

Polynomial operator+(const Polynomial& p, const Polynomial& q) {
  Polynomial out = p;
  out += q;
  return out;
}

Polynomial operator-(const Polynomial& p, const Polynomial& q) {
  Polynomial out = p;
  out -= q;
  return out;
}

Polynomial operator*(const Polynomial& p, const Polynomial& q) {
  // Accumulate raw products first so cancellation is judged on the final sum.
  std::map<Monomial, double, GradedLex> acc;
  for (const auto& [mp, cp] : p.terms()) {
    for (const auto& [mq, cq] : q.terms()) acc[mp * mq] += cp * cq;
  }
  Polynomial out;
  for (const auto& [m, c] : acc) out.add_term(m, c);
  return out;
}

Polynomial operator*(double s, const Polynomial& p) {
  Polynomial out = p;
  out *= s;
  return out;
}

Polynomial add(const Polynomial& p, const Polynomial& q) { return p + q; }
Polynomial mul(const Polynomial& p, const Polynomial& q) { return p * q; }

PolyVector gradient(const Polynomial& p, const std::vector<VarId>& vars) {
  for (VarId v : p.variables()) {
    if (std::find(vars.begin(), vars.end(), v) == vars.end()) {
      throw DimensionError("gradient: variable id " + std::to_string(v) +
                           " missing from the variable list");
    }
  }
  PolyVector g(vars.size());
  for (std::size_t k = 0; k < vars.size(); ++k) g[k] = p.derivative(vars[k]);
  return g;
}

double evaluate(const Polynomial& p, std::span<const double> point) { return p.evaluate(point); }

Polynomial substitute_linear(const Polynomial& p, const std::vector<VarId>& y_vars,
                             const Eigen::MatrixXd& M, const std::vector<VarId>& delta_vars) {
  if (static_cast<std::size_t>(M.rows()) != y_vars.size() ||
      static_cast<std::size_t>(M.cols()) != delta_vars.size()) {
    throw DimensionError("substitute_linear: map is " + std::to_string(M.rows()) + "x" +
                         std::to_string(M.cols()) + ", expected " +
                         std::to_string(y_vars.size()) + "x" + std::to_string(delta_vars.size()));
  }
  std::map<VarId, Polynomial> forms;
  for (std::size_t i = 0; i < y_vars.size(); ++i) {
    Polynomial f;
    for (std::size_t k = 0; k < delta_vars.size(); ++k) {
      f.add_term(Monomial::var(delta_vars[k]), M(i, k));
    }
    forms[y_vars[i]] = f;
  }
  // Cache powers of each linear form.
  std::map<std::pair<VarId, unsigned>, Polynomial> power_cache;
  auto power = [&](VarId v, unsigned e) -> const Polynomial& {
    auto key = std::make_pair(v, e);
    auto it = power_cache.find(key);
    if (it != power_cache.end()) return it->second;
    Polynomial r = 1.0;
    for (unsigned k = 0; k < e; ++k) r = r * forms.at(v);
    return power_cache.emplace(key, std::move(r)).first->second;
  };
  Polynomial out;
  for (const auto& [m, c] : p.terms()) {
    Polynomial term(c);
    std::vector<std::pair<VarId, unsigned>> kept;
    for (const auto& [v, e] : m.powers()) {
      if (forms.count(v)) {
        term = term * power(v, e);
      } else {
        kept.emplace_back(v, e);
      }
    }
    if (!kept.empty()) term = term * Polynomial(Monomial(std::move(kept)));
    out += term;
  }
  return out;
}

std::vector<Monomial> monomials_up_to(const std::vector<VarId>& vars, unsigned max_degree,
                                      unsigned min_degree) {
  std::vector<Monomial> out;
  std::vector<std::pair<VarId, unsigned>> cur;
  std::function<void(std::size_t, unsigned)> rec = [&](std::size_t i, unsigned left) {
    if (i == vars.size()) {
      Monomial m(cur);
      if (m.degree() >= min_degree) out.push_back(std::move(m));
      return;
    }
    for (unsigned e = 0; e <= left; ++e) {
      cur.emplace_back(vars[i], e);
      rec(i + 1, left - e);
      cur.pop_back();
    }
  };
  rec(0, max_degree);
  std::sort(out.begin(), out.end(), GradedLex{});
  return out;
}

std::string to_string(const Polynomial& p, const VariableRegistry& reg) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  os.precision(12);
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    if (!first) os << (c < 0 ? " - " : " + ");
    else if (c < 0) os << "-";
    first = false;
    const double a = std::abs(c);
    const bool unit = std::abs(a - 1.0) < 1e-15 && !m.is_constant();
    if (!unit) os << a;
    bool star = !unit;
    for (const auto& [v, e] : m.powers()) {
      if (star) os << "*";
      os << reg.name(v);
      if (e > 1) os << "^" << e;
      star = true;
    }
  }
  return os.str();
}

nlohmann::json to_json(const Polynomial& p, const VariableRegistry& reg) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [m, c] : p.terms()) {
    nlohmann::json exps = nlohmann::json::object();
    for (const auto& [v, e] : m.powers()) exps[reg.name(v)] = e;
    arr.push_back({{"exponents", exps}, {"coeff", c}});
  }
  return arr;
}

Polynomial polynomial_from_json(const nlohmann::json& j, VariableRegistry& reg) {
  if (!j.is_array()) throw ConfigError("", "polynomial must be a JSON array of terms");
  Polynomial out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& t = j[k];
    const std::string path = "[" + std::to_string(k) + "]";
    if (!t.is_object() || !t.contains("exponents") || !t.contains("coeff")) {
      throw ConfigError(path, "term needs 'exponents' and 'coeff'");
    }
    if (!t["coeff"].is_number()) throw ConfigError(path + ".coeff", "must be a number");
    std::vector<std::pair<VarId, unsigned>> powers;
    for (const auto& [name, e] : t["exponents"].items()) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0)) {
        throw ConfigError(path + ".exponents." + name, "must be a non-negative integer");
      }
      powers.emplace_back(reg.add(name), e.get<unsigned>());
    }
    out.add_term(Monomial(std::move(powers)), t["coeff"].get<double>());
  }
  return out;
}

}  // namespace mgsos
