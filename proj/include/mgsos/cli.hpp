#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mgsos/certifier.hpp"

namespace mgsos {

inline constexpr const char* kToolVersion = "0.1.0";

/// Degree overrides from the command line; unset fields keep their default.
struct DegreeFlags {
  std::optional<int> l_V, l_s1, l_s2, l_sigma1, l_sigma2;
  void apply(CertifierConfig& cfg) const;
};

struct AssessOptions {
  std::string network;
  std::string out = ".";
  std::set<int> island;
  DegreeFlags degrees;
  bool prescreen = true;
};

struct CoordinateOptions {
  std::string network;
  std::string coordination;
  std::string out = ".";
  std::set<int> island;
  DegreeFlags degrees;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  int threads = 1;
};

struct SimulateOptions {
  std::string network;
  std::string out = ".";
  std::set<int> island;
  double dt = 1e-3;
  double t_end = 20.0;
  std::vector<double> initial;  // empty: 0.01 on every non-slack bus
  int record_every = 1;
};

struct SectorOptions {
  double y_star = 0.0;
  std::string out = ".";
  std::optional<double> lo, hi;
  int points = 1000;
};

/// Each command writes its outputs and a manifest.json under `out` and
/// returns the process exit code.
int cmd_assess(const AssessOptions& o);
int cmd_coordinate(const CoordinateOptions& o);
int cmd_simulate(const SimulateOptions& o);
int cmd_sector(const SectorOptions& o);

/// Full command-line entry point.
int run_cli(int argc, const char* const* argv);

}  // namespace mgsos
