#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "mgsos/certifier.hpp"
#include "mgsos/grid.hpp"

namespace mgsos {

/// Full named parameter vector α with the adjustable subset and its
/// multiplier ranges.
struct ParamSpec {
  std::vector<std::string> names;
  Eigen::VectorXd alpha;
  std::vector<int> adjustable;                     // indices into names
  std::vector<std::pair<double, double>> bounds;   // per adjustable entry
  /// Per-parameter divisor in the distance; all ones by default.
  Eigen::VectorXd scale;

  void validate() const;
  int index_of(const std::string& name) const;
};

/// α from the network; throws ConfigError for unknown names or bad bounds.
ParamSpec make_param_spec(const MicrogridNetwork& net, const std::vector<std::string>& adjustable,
                          const std::vector<std::pair<double, double>>& bounds);

struct CoordinationConfig {
  std::vector<std::string> adjustable;
  std::vector<std::pair<double, double>> bounds;
  std::map<std::string, double> scale;
  int trials = 500;
  std::uint64_t seed = 0;
  CertifierConfig degrees;
};

CoordinationConfig coordination_from_json(const nlohmann::json& j);
ParamSpec make_param_spec(const MicrogridNetwork& net, const CoordinationConfig& cfg);
CoordinationConfig load_coordination(const std::string& path);

/// Independent stream for one trial.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);
/// Uniform double in [lo, hi) from the top 53 bits of one draw.
double uniform(std::mt19937_64& rng, double lo, double hi);

/// α′ with α′_i = γ_i α_i for adjustable i. Draws with T_a = 0 or |X| < 1e-6
/// are resampled; nullopt after 100 attempts.
std::optional<Eigen::VectorXd> randomize(const ParamSpec& spec, std::mt19937_64& rng);

double parameter_distance(const ParamSpec& spec, const Eigen::VectorXd& v);

struct TrialRecord {
  int trial = 0;
  std::optional<Eigen::VectorXd> params;
  int zeta = 0;
  double distance = std::numeric_limits<double>::quiet_NaN();
  Verdict verdict = Verdict::Unknown;
  bool skipped = false;
  std::string note;
  Eigen::VectorXd equilibrium;
};

struct FeasibleSample {
  int trial = 0;
  Eigen::VectorXd params;
  double distance = 0.0;
  Eigen::VectorXd equilibrium;
};

struct CoordinationResult {
  bool empty = true;  // no sample was certified
  Eigen::VectorXd v_star;
  Eigen::VectorXd o_star;
  std::vector<FeasibleSample> feasible_set;  // ordered by trial
  std::vector<TrialRecord> records;          // ordered by trial
  int trials = 0;
  std::uint64_t seed = 0;
  int skipped = 0;
};

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

/// Algorithm: randomize, rebuild the network, certify; keep the certified
/// sample nearest α.
CoordinationResult coordinate(const MicrogridNetwork& net, const ParamSpec& spec,
                              const CertifierConfig& cfg, int trials, std::uint64_t seed,
                              int threads = 1);

nlohmann::json to_json(const CoordinationResult& r, const ParamSpec& spec);
void write_scatter_csv(std::ostream& os, const CoordinationResult& r, const ParamSpec& spec);

}  // namespace mgsos
