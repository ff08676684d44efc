#include "mgsos/coordinator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <thread>

#include "mgsos/error.hpp"
#include "mgsos/json_util.hpp"

namespace mgsos {

using Eigen::VectorXd;

void ParamSpec::validate() const {
  if (alpha.size() != static_cast<Eigen::Index>(names.size())) {
    throw DimensionError("ParamSpec: alpha and names differ in length");
  }
  if (bounds.size() != adjustable.size()) throw DimensionError("ParamSpec: one bound per adjustable");
  for (std::size_t k = 0; k < adjustable.size(); ++k) {
    const int i = adjustable[k];
    if (i < 0 || i >= static_cast<int>(names.size())) {
      throw ConfigError("adjustable[" + std::to_string(k) + "]", "index out of range");
    }
    if (!(bounds[k].first <= bounds[k].second)) {
      throw ConfigError("bounds." + names[i], "lower bound exceeds upper bound");
    }
  }
  if (scale.size() != alpha.size() || (scale.array() <= 0.0).any()) {
    throw ConfigError("scale", "must hold one positive entry per parameter");
  }
}

int ParamSpec::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

ParamSpec make_param_spec(const MicrogridNetwork& net, const std::vector<std::string>& adjustable,
                          const std::vector<std::pair<double, double>>& bounds) {
  ParamSpec s;
  s.names = net.parameter_names();
  s.alpha.resize(s.names.size());
  for (std::size_t i = 0; i < s.names.size(); ++i) s.alpha(i) = net.parameter(s.names[i]);
  s.scale = VectorXd::Ones(s.alpha.size());
  for (std::size_t k = 0; k < adjustable.size(); ++k) {
    const int i = s.index_of(adjustable[k]);
    if (i < 0) throw ConfigError("adjustable[" + std::to_string(k) + "]", "unknown parameter " + adjustable[k]);
    for (int j : s.adjustable) {
      if (j == i) throw ConfigError("adjustable[" + std::to_string(k) + "]", "duplicate " + adjustable[k]);
    }
    s.adjustable.push_back(i);
  }
  s.bounds = bounds;
  s.validate();
  return s;
}

ParamSpec make_param_spec(const MicrogridNetwork& net, const CoordinationConfig& cfg) {
  ParamSpec s = make_param_spec(net, cfg.adjustable, cfg.bounds);
  for (const auto& [name, v] : cfg.scale) {
    const int i = s.index_of(name);
    if (i < 0) throw ConfigError("scale." + name, "unknown parameter");
    s.scale(i) = v;
  }
  s.validate();
  return s;
}

CoordinationConfig coordination_from_json(const nlohmann::json& j) {
  JsonReader r(j, "");
  r.allow_keys({"schema_version", "adjustable", "bounds", "trials", "seed", "degrees", "scale", "description"});
  r.require_schema_version();
  CoordinationConfig c;
  const auto& adj = j.contains("adjustable") ? j.at("adjustable") : nlohmann::json();
  if (!adj.is_array()) throw ConfigError("adjustable", "expected an array of names");
  (void)r.object("bounds");
  for (std::size_t k = 0; k < adj.size(); ++k) {
    if (!adj[k].is_string()) {
      throw ConfigError("adjustable[" + std::to_string(k) + "]", "expected a string");
    }
    const std::string name = adj[k].get<std::string>();
    c.adjustable.push_back(name);
    const auto& b = j.at("bounds").contains(name) ? j.at("bounds").at(name) : nlohmann::json();
    if (!b.is_array() || b.size() != 2 || !b[0].is_number() || !b[1].is_number()) {
      throw ConfigError("bounds." + name, "expected [lo, hi]");
    }
    c.bounds.emplace_back(b[0].get<double>(), b[1].get<double>());
  }
  for (const auto& [name, v] : j.at("bounds").items()) {
    if (std::find(c.adjustable.begin(), c.adjustable.end(), name) == c.adjustable.end()) {
      throw ConfigError("bounds." + name, "not listed in adjustable");
    }
  }
  c.trials = r.integer("trials");
  if (c.trials < 1) throw ConfigError("trials", "must be at least 1");
  c.seed = r.unsigned_integer("seed");
  if (r.has("degrees")) c.degrees = degrees_from_json(j.at("degrees"), "degrees");
  if (r.has("scale")) {
    const JsonReader s = r.object("scale");
    for (const auto& [name, v] : j.at("scale").items()) c.scale[name] = s.number(name);
  }
  return c;
}

CoordinationConfig load_coordination(const std::string& path) {
  return coordination_from_json(read_json_file(path));
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

std::optional<VectorXd> randomize(const ParamSpec& spec, std::mt19937_64& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    VectorXd a = spec.alpha;
    bool ok = true;
    for (std::size_t k = 0; k < spec.adjustable.size(); ++k) {
      const int i = spec.adjustable[k];
      a(i) = uniform(rng, spec.bounds[k].first, spec.bounds[k].second) * spec.alpha(i);
      const std::string& name = spec.names[i];
      if (name.rfind("T_a", 0) == 0 && a(i) == 0.0) ok = false;
      if (name.rfind("X_", 0) == 0 && std::abs(a(i)) < 1e-6) ok = false;
    }
    if (ok) return a;
  }
  return std::nullopt;
}

double parameter_distance(const ParamSpec& spec, const VectorXd& v) {
  return ((spec.alpha - v).array() / spec.scale.array()).matrix().norm();
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

CoordinationResult coordinate(const MicrogridNetwork& net, const ParamSpec& spec,
                              const CertifierConfig& cfg, int trials, std::uint64_t seed,
                              int threads) {
  if (trials < 1) throw ConfigError("trials", "must be at least 1");
  spec.validate();
  cfg.validate();
  CoordinationResult res;
  res.trials = trials;
  res.seed = seed;
  res.records.resize(trials);

  parallel_for(trials, threads, [&](int i) {
    TrialRecord& rec = res.records[i];
    rec.trial = i;
    auto rng = trial_rng(seed, static_cast<std::uint64_t>(i));
    rec.params = randomize(spec, rng);
    if (!rec.params) {
      rec.skipped = true;
      rec.note = "resampling exhausted";
      return;
    }
    rec.distance = parameter_distance(spec, *rec.params);
    try {
      std::map<std::string, double> values;
      for (int k : spec.adjustable) values[spec.names[k]] = (*rec.params)(k);
      const MicrogridNetwork trial_net = net.with_parameters(values);
      rec.equilibrium = trial_net.delta_star();
      const CertifyReport rep = assess(trial_net, cfg);
      rec.zeta = rep.zeta;
      rec.verdict = rep.sdp_verdict;
      rec.note = rep.note;
    } catch (const Error& e) {
      rec.skipped = true;
      rec.note = e.what();
    }
  });

  for (const auto& rec : res.records) {
    if (rec.skipped) ++res.skipped;
    if (rec.zeta != 1) continue;
    res.feasible_set.push_back({rec.trial, *rec.params, rec.distance, rec.equilibrium});
  }
  const FeasibleSample* best = nullptr;
  for (const auto& s : res.feasible_set) {
    if (!best || s.distance < best->distance) best = &s;
  }
  if (best) {
    res.empty = false;
    res.v_star = best->params;
    res.o_star = best->equilibrium;
  }
  return res;
}

namespace {

nlohmann::json named(const ParamSpec& spec, const VectorXd& v) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < spec.names.size(); ++i) j[spec.names[i]] = v(i);
  return j;
}

std::vector<double> as_vector(const VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json to_json(const CoordinationResult& r, const ParamSpec& spec) {
  nlohmann::json j;
  j["empty"] = r.empty;
  j["v_star"] = r.empty ? nlohmann::json(nullptr) : named(spec, r.v_star);
  j["o_star"] = r.empty ? nlohmann::json(nullptr) : nlohmann::json(as_vector(r.o_star));
  j["alpha"] = named(spec, spec.alpha);
  nlohmann::json adj = nlohmann::json::array();
  for (std::size_t k = 0; k < spec.adjustable.size(); ++k) {
    adj.push_back({{"name", spec.names[spec.adjustable[k]]},
                   {"bounds", {spec.bounds[k].first, spec.bounds[k].second}}});
  }
  j["adjustable"] = adj;
  j["feasible_set"] = nlohmann::json::array();
  for (const auto& s : r.feasible_set) {
    j["feasible_set"].push_back({{"trial", s.trial},
                                 {"params", named(spec, s.params)},
                                 {"distance", s.distance},
                                 {"equilibrium", as_vector(s.equilibrium)}});
  }
  j["trials"] = r.trials;
  j["seed"] = r.seed;
  j["skipped"] = r.skipped;
  std::map<std::string, int> verdicts;
  for (const auto& rec : r.records) {
    if (!rec.skipped) ++verdicts[to_string(rec.verdict)];
  }
  j["verdict_counts"] = verdicts;
  return j;
}

void write_scatter_csv(std::ostream& os, const CoordinationResult& r, const ParamSpec& spec) {
  os << "trial";
  for (int k : spec.adjustable) os << ',' << spec.names[k];
  os << ",zeta,distance\n";
  char buf[32];
  for (const auto& rec : r.records) {
    os << rec.trial;
    for (int k : spec.adjustable) {
      os << ',';
      if (rec.params) {
        std::snprintf(buf, sizeof buf, "%.17g", (*rec.params)(k));
        os << buf;
      }
    }
    os << ',' << rec.zeta << ',';
    if (std::isfinite(rec.distance)) {
      std::snprintf(buf, sizeof buf, "%.17g", rec.distance);
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace mgsos
