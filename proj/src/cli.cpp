#include "mgsos/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgsos/coordinator.hpp"
#include "mgsos/error.hpp"
#include "mgsos/simulator.hpp"

namespace fs = std::filesystem;

namespace mgsos {

void DegreeFlags::apply(CertifierConfig& cfg) const {
  if (l_V) cfg.l_V = *l_V;
  if (l_s1) cfg.l_s1 = *l_s1;
  if (l_s2) cfg.l_s2 = *l_s2;
  if (l_sigma1) cfg.l_sigma1 = *l_sigma1;
  if (l_sigma2) cfg.l_sigma2 = *l_sigma2;
}

namespace {

/// Collects outputs and writes manifest.json however the command ends.
class Run {
 public:
  Run(std::string command, std::string out) : command_(std::move(command)), out_(std::move(out)) {
    start_ = std::chrono::steady_clock::now();
    manifest_["command"] = command_;
    manifest_["tool_version"] = kToolVersion;
    manifest_["inputs"] = nlohmann::json::array();
    manifest_["outputs"] = nlohmann::json::array();
    manifest_["seed"] = nullptr;
  }

  void input(const std::string& path) { manifest_["inputs"].push_back(path); }
  void seed(std::uint64_t s) { manifest_["seed"] = s; }
  nlohmann::json& extra() { return manifest_; }

  std::string path(const std::string& name) const { return (fs::path(out_) / name).string(); }

  std::ofstream open(const std::string& name) {
    fs::create_directories(out_);
    std::ofstream os(path(name));
    if (!os) throw Error("cannot write " + path(name));
    manifest_["outputs"].push_back(name);
    return os;
  }

  void write_json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }

  int finish(int code, const std::string& status, const std::string& error = "") {
    manifest_["exit_code"] = code;
    manifest_["status"] = status;
    if (!error.empty()) manifest_["error"] = error;
    manifest_["wall_time"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    try {
      fs::create_directories(out_);
      std::ofstream os(path("manifest.json"));
      os << manifest_.dump(2) << '\n';
    } catch (const std::exception& e) {
      std::cerr << "mgsos: cannot write manifest: " << e.what() << '\n';
    }
    return code;
  }

  /// Runs `body`, mapping exceptions to exit code 1.
  template <typename F>
  int guard(F&& body) {
    try {
      return body();
    } catch (const ConfigError& e) {
      std::cerr << "mgsos " << command_ << ": " << e.what() << '\n';
      return finish(1, "error", e.what());
    } catch (const std::exception& e) {
      std::cerr << "mgsos " << command_ << ": " << e.what() << '\n';
      return finish(1, "error", e.what());
    }
  }

 private:
  std::string command_;
  std::string out_;
  nlohmann::json manifest_;
  std::chrono::steady_clock::time_point start_;
};

MicrogridNetwork load_with_island(const std::string& path, const std::set<int>& removed) {
  MicrogridNetwork net = load_network(path);
  return removed.empty() ? net : island(net, removed);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int cmd_assess(const AssessOptions& o) {
  Run run("assess", o.out);
  return run.guard([&]() {
    run.input(o.network);
    const MicrogridNetwork net = load_with_island(o.network, o.island);
    CertifierConfig cfg;
    o.degrees.apply(cfg);
    cfg.jacobian_prescreen = o.prescreen;
    const CertifyReport rep = assess(net, cfg);
    nlohmann::json j = to_json(rep);
    j["degrees"] = to_json(cfg);
    j["network"] = to_json(net);
    run.write_json("report.json", j);
    run.extra()["solve_wall_time"] = rep.wall_time;
    std::cout << "zeta=" << rep.zeta << " verdict=" << to_string(rep.sdp_verdict)
              << " (" << rep.note << ")\n";
    return run.finish(rep.zeta == 1 ? 0 : 2, rep.zeta == 1 ? "certified" : "not certified");
  });
}

int cmd_coordinate(const CoordinateOptions& o) {
  Run run("coordinate", o.out);
  return run.guard([&]() {
    run.input(o.network);
    run.input(o.coordination);
    const MicrogridNetwork net = load_with_island(o.network, o.island);
    CoordinationConfig cc = load_coordination(o.coordination);
    if (o.seed) cc.seed = *o.seed;
    if (o.trials) cc.trials = *o.trials;
    if (cc.trials < 1) throw ConfigError("trials", "must be at least 1");
    o.degrees.apply(cc.degrees);
    run.seed(cc.seed);
    const ParamSpec spec = make_param_spec(net, cc);
    const CoordinationResult res = coordinate(net, spec, cc.degrees, cc.trials, cc.seed, o.threads);
    nlohmann::json j = to_json(res, spec);
    j["degrees"] = to_json(cc.degrees);
    run.write_json("coordination.json", j);
    {
      auto os = run.open("scatter.csv");
      write_scatter_csv(os, res, spec);
    }
    std::cout << "feasible " << res.feasible_set.size() << " of " << res.trials << " trials";
    if (!res.empty) {
      std::cout << ", v* at distance " << parameter_distance(spec, res.v_star);
    }
    std::cout << '\n';
    return run.finish(res.empty ? 2 : 0, res.empty ? "no certified sample" : "certified sample found");
  });
}

int cmd_simulate(const SimulateOptions& o) {
  Run run("simulate", o.out);
  return run.guard([&]() {
    run.input(o.network);
    const MicrogridNetwork net = load_with_island(o.network, o.island);
    SimConfig cfg;
    cfg.dt = o.dt;
    cfg.t_end = o.t_end;
    cfg.record_every = o.record_every;
    if (o.initial.empty()) {
      cfg.initial_delta = default_initial_delta(net);
    } else {
      cfg.initial_delta = Eigen::Map<const Eigen::VectorXd>(o.initial.data(), o.initial.size());
    }
    const Trajectory tr = simulate(net, cfg);
    {
      auto os = run.open("trajectory.csv");
      write_trajectory_csv(os, tr, net);
    }
    {
      auto os = run.open("differences.csv");
      write_differences_csv(os, tr, net);
    }
    nlohmann::json j;
    j["classification"] = to_string(tr.classification);
    j["final_time"] = tr.times.back();
    j["final_state"] = std::vector<double>(tr.final_state.data(), tr.final_state.data() + tr.final_state.size());
    j["final_max_abs"] = tr.final_state.cwiseAbs().maxCoeff();
    j["dt"] = cfg.dt;
    j["t_end"] = cfg.t_end;
    j["convergence_tol"] = cfg.convergence_tol;
    j["divergence_bound"] = cfg.divergence_bound;
    j["initial_delta"] =
        std::vector<double>(cfg.initial_delta.data(), cfg.initial_delta.data() + cfg.initial_delta.size());
    run.write_json("simulation.json", j);
    std::cout << to_string(tr.classification) << " at t=" << tr.times.back() << '\n';
    switch (tr.classification) {
      case Classification::Converged: return run.finish(0, "Converged");
      case Classification::Diverged: return run.finish(2, "Diverged");
      case Classification::Undecided: break;
    }
    return run.finish(3, "Undecided");
  });
}

int cmd_sector(const SectorOptions& o) {
  Run run("sector", o.out);
  return run.guard([&]() {
    if (!std::isfinite(o.y_star)) throw ConfigError("y_star", "must be finite");
    if (o.points < 2) throw ConfigError("points", "must be at least 2");
    const auto [ilo, ihi] = sector_interval(o.y_star);
    const double lo = o.lo.value_or(ilo);
    const double hi = o.hi.value_or(ihi);
    if (!(lo < hi)) throw ConfigError("range", "lower end must be below upper end");
    auto os = run.open("sector.csv");
    os << "# y_star=" << fmt(o.y_star) << " interval=[" << fmt(ilo) << "," << fmt(ihi) << "]\n";
    os << "y,phi,eta1,eta2\n";
    for (int i = 0; i < o.points; ++i) {
      const double y = lo + (hi - lo) * i / (o.points - 1);
      os << fmt(y) << ',' << fmt(sector_phi(y, o.y_star)) << ',' << fmt(sector_eta1(y, o.y_star)) << ','
         << fmt(sector_eta2(y, o.y_star)) << '\n';
    }
    return run.finish(0, "ok");
  });
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Sum-of-squares stability assessment and parameter coordination for microgrid interconnections"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  auto add_degrees = [](CLI::App* c, DegreeFlags& d) {
    c->add_option("--deg-v", d.l_V, "degree of V (even)");
    c->add_option("--deg-s1", d.l_s1, "degree of the s1 multipliers (even)");
    c->add_option("--deg-s2", d.l_s2, "degree of the s2 multipliers (even)");
    c->add_option("--deg-sig1", d.l_sigma1, "degree of sigma1 (rounded up to even)");
    c->add_option("--deg-sig2", d.l_sigma2, "degree of sigma2 (rounded up to even)");
  };
  auto add_island = [](CLI::App* c, std::set<int>& ids) {
    c->add_option("--island", ids, "bus ids to disconnect before the run");
  };

  AssessOptions ao;
  auto* assess_cmd = app.add_subcommand("assess", "certify the equilibrium of a network");
  assess_cmd->add_option("network", ao.network, "network JSON")->required();
  assess_cmd->add_option("--out", ao.out, "output directory");
  add_island(assess_cmd, ao.island);
  add_degrees(assess_cmd, ao.degrees);
  bool no_prescreen = false;
  assess_cmd->add_flag("--no-prescreen", no_prescreen, "always run the SDP");

  CoordinateOptions co;
  auto* coord_cmd = app.add_subcommand("coordinate", "randomized parameter coordination");
  coord_cmd->add_option("network", co.network, "network JSON")->required();
  coord_cmd->add_option("coordination", co.coordination, "coordination JSON")->required();
  coord_cmd->add_option("--out", co.out, "output directory");
  coord_cmd->add_option("--seed", co.seed, "override the configured seed");
  coord_cmd->add_option("--trials", co.trials, "override the configured trial count");
  co.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  coord_cmd->add_option("--threads", co.threads, "worker threads")->check(CLI::PositiveNumber);
  add_island(coord_cmd, co.island);
  add_degrees(coord_cmd, co.degrees);

  SimulateOptions so;
  auto* sim_cmd = app.add_subcommand("simulate", "time-domain simulation");
  sim_cmd->add_option("network", so.network, "network JSON")->required();
  sim_cmd->add_option("--out", so.out, "output directory");
  sim_cmd->add_option("--dt", so.dt, "step size (s)");
  sim_cmd->add_option("--t-end", so.t_end, "final time (s)");
  sim_cmd->add_option("--initial", so.initial, "initial deviation per bus (rad)")->delimiter(',');
  sim_cmd->add_option("--record-every", so.record_every, "keep every k-th step");
  add_island(sim_cmd, so.island);

  SectorOptions xo;
  auto* sec_cmd = app.add_subcommand("sector", "sample the sector bounds of one edge");
  sec_cmd->add_option("--y-star", xo.y_star, "equilibrium angle difference (rad)")->required();
  sec_cmd->add_option("--out", xo.out, "output directory");
  sec_cmd->add_option("--lo", xo.lo, "lower end of the sampled range");
  sec_cmd->add_option("--hi", xo.hi, "upper end of the sampled range");
  sec_cmd->add_option("--points", xo.points, "number of samples");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  ao.prescreen = !no_prescreen;
  if (*assess_cmd) return cmd_assess(ao);
  if (*coord_cmd) return cmd_coordinate(co);
  if (*sim_cmd) return cmd_simulate(so);
  return cmd_sector(xo);
}

}  // namespace mgsos
