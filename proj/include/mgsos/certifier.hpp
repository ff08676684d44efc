#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgsos/grid.hpp"
#include "mgsos/sdp.hpp"
#include "mgsos/sos_program.hpp"

namespace mgsos {

struct CertifierConfig {
  int l_V = 4;
  int l_s1 = 2;
  int l_s2 = 2;
  int l_sigma1 = 4;
  int l_sigma2 = 5;
  double epsilon_sigma = 1e-4;
  /// Skip the SDP when the origin Jacobian has an eigenvalue with Re ≥ 0;
  /// such a network cannot admit the certificate.
  bool jacobian_prescreen = true;
  SdpSettings sdp;

  /// Throws ConfigError for odd or too-small degrees.
  void validate() const;
  /// l_σ rounded up to even.
  int sigma1_degree() const { return l_sigma1 + (l_sigma1 % 2); }
  int sigma2_degree() const { return l_sigma2 + (l_sigma2 % 2); }
};

struct ProblemStats {
  int num_blocks = 0;
  int num_equalities = 0;
  int num_decisions = 0;
  std::vector<int> gram_sizes;
};

struct CertifyReport {
  int zeta = 0;
  std::optional<SosCertificate> certificate;
  ProblemStats problem_stats;
  double wall_time = 0.0;

  Verdict sdp_verdict = Verdict::Unknown;
  double margin = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool solved = false;  // false when the prescreen decided
  std::string note;
  double jacobian_max_real = 0.0;

  /// Variables and resolved objects (V, s1, s2 are empty unless zeta = 1).
  VariableRegistry registry;
  std::vector<VarId> delta_vars;
  std::vector<VarId> phi_vars;
  Polynomial V;
  std::vector<Polynomial> s1;
  std::vector<Polynomial> s2;
  std::vector<std::pair<double, double>> domain;  // per-edge y interval
};

/// Builds and solves the SOS program for the Lyapunov conditions
///   V − σ₁ SOS in δ,
///   −∇V·(Aδ + B′φ) − σ₂ + s₁ᵀr + s₂ᵀa SOS in (δ, φ),  s₁, s₂ SOS.
CertifyReport assess(const MicrogridNetwork& net, const CertifierConfig& cfg);

/// ∇V·f(δ) with the true sine nonlinearity.
double lyapunov_derivative(const CertifyReport& report, const StateSpace& ss,
                           const Eigen::VectorXd& delta);

nlohmann::json to_json(const CertifyReport& r);
nlohmann::json to_json(const CertifierConfig& c);
/// Reads {l_V, l_s1, l_s2, l_sigma1, l_sigma2, epsilon_sigma?} onto `base`.
CertifierConfig degrees_from_json(const nlohmann::json& j, const std::string& path,
                                  CertifierConfig base = {});

}  // namespace mgsos
