// Acceptance run: one PASS/FAIL line per criterion. Tolerances are fixed here.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "mgsos/certifier.hpp"
#include "mgsos/cli.hpp"
#include "mgsos/coordinator.hpp"
#include "mgsos/grid.hpp"
#include "mgsos/simulator.hpp"
#include "mgsos/sos_program.hpp"
#include "support.hpp"

using namespace mgsos;
namespace fs = std::filesystem;
using Eigen::VectorXd;

namespace {

const std::string kConfigs = MGSOS_SOURCE_DIR "/configs/";

constexpr double kCrit1Seconds = 5.0;
constexpr double kCrit2Seconds = 120.0;
constexpr double kConvergedInf = 1e-3;
constexpr double kSectorTol = 1e-9;
constexpr double kIntervalTol = 1e-12;
constexpr int kSectorPoints = 10000;
constexpr double kGramResidual = 1e-6;
constexpr double kCrit5Seconds = 60.0;
constexpr double kGradRel = 1e-4;
constexpr double kPowerFlowResidual = 1e-9;
constexpr double kExpTol = 1e-6;
constexpr std::uint64_t kCoordSeed = 20240607;

int failures = 0;

void report(int id, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", id, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mgsos_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int threads() { return std::max(1u, std::thread::hardware_concurrency()); }

double max_coeff(const Polynomial& p) {
  double m = 0.0;
  for (const auto& [mono, c] : p.terms()) m = std::max(m, std::abs(c));
  return m;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  SimulateOptions o;
  o.network = kConfigs + "three_bus_original.json";
  o.out = scratch("c1").string();
  o.initial = {0.01, 0.01, 0.01};
  const int code = cmd_simulate(o);
  const StateSpace ss = build_state_space(load_network(o.network));
  Eigen::EigenSolver<Eigen::MatrixXd> es(origin_jacobian(ss), false);
  const double re = es.eigenvalues().real().maxCoeff();
  const double t = seconds_since(t0);
  report(1, code == 2 && re > 0.0 && t < kCrit1Seconds,
         "exit=" + std::to_string(code) + " max Re(eig)=" + fmt("%.5f", re) + " time=" + fmt("%.2fs", t));
}

void criterion2() {
  AssessOptions a;
  a.network = kConfigs + "three_bus_suggested.json";
  a.out = scratch("c2a").string();
  a.degrees = {4, 2, 2, 4, 6};
  const auto t0 = std::chrono::steady_clock::now();
  const int acode = cmd_assess(a);
  const double t = seconds_since(t0);
  const auto rep = nlohmann::json::parse(slurp(fs::path(a.out) / "report.json"));

  SimulateOptions s;
  s.network = a.network;
  s.out = scratch("c2s").string();
  s.initial = {0.01, 0.01, 0.01};
  const int scode = cmd_simulate(s);
  SimConfig sc;
  sc.initial_delta = VectorXd::Constant(3, 0.01);
  const double fin = simulate(load_network(s.network), sc).final_state.cwiseAbs().maxCoeff();

  std::string detail = "assess exit=" + std::to_string(acode) + " zeta=" + rep["zeta"].dump() +
                       " verdict=" + rep["sdp_verdict"].dump() + " margin=" + rep["margin"].dump() +
                       " solve=" + fmt("%.2fs", t) + "; simulate exit=" + std::to_string(scode) +
                       " |d(20)|inf=" + fmt("%.3g", fin);
  report(2, acode == 0 && scode == 0 && fin <= kConvergedInf && t < kCrit2Seconds, detail);
}

void criterion3() {
  const MicrogridNetwork net = load_network(kConfigs + "three_bus_original.json");
  const CoordinationConfig cc = load_coordination(kConfigs + "coordination.json");
  CertifierConfig deg = cc.degrees;
  const ParamSpec spec = make_param_spec(net, cc);
  const auto t0 = std::chrono::steady_clock::now();
  const CoordinationResult r = coordinate(net, spec, deg, 500, kCoordSeed, threads());
  const double t = seconds_since(t0);

  std::string detail = "N=500 seed=" + std::to_string(kCoordSeed) + " |S|=" + std::to_string(r.feasible_set.size()) +
                       " skipped=" + std::to_string(r.skipped) + " time=" + fmt("%.0fs", t);
  if (r.empty) {
    report(3, false, detail + " (empty feasible set)");
    return;
  }
  std::map<std::string, double> v;
  for (int k : spec.adjustable) v[spec.names[k]] = r.v_star(k);
  const MicrogridNetwork vn = net.with_parameters(v);
  const bool recert = assess(vn, deg).zeta == 1;
  SimConfig sc;
  sc.initial_delta = VectorXd::Constant(3, 0.01);
  const bool conv = simulate(vn, sc).classification == Classification::Converged;
  double best = INFINITY;
  for (const auto& s : r.feasible_set) best = std::min(best, parameter_distance(spec, s.params));
  const bool minimal = parameter_distance(spec, r.v_star) == best;
  report(3, recert && conv && minimal,
         detail + " recertified=" + std::to_string(recert) + " converged=" + std::to_string(conv) +
             " minimal=" + std::to_string(minimal));
}

void criterion4() {
  const double pi = std::numbers::pi;
  double worst = -INFINITY;
  for (double ys : {0.0, pi / 6, -pi / 6, pi / 3, -pi / 3, -0.57 + 0.24}) {
    const auto [lo, hi] = sector_interval(ys);
    for (int k = 0; k < kSectorPoints; ++k) {
      const double y = lo + (hi - lo) * k / (kSectorPoints - 1);
      const double phi = sector_phi(y, ys);
      worst = std::max(worst, (phi - sector_eta1(y, ys)) * (phi - sector_eta2(y, ys)));
    }
  }
  const auto [lo, hi] = sector_interval(-pi / 6);
  const double err = std::max(std::abs(lo + 5 * pi / 6), std::abs(hi - 7 * pi / 6));
  report(4, worst <= kSectorTol && err <= kIntervalTol,
         "max product=" + fmt("%.3g", worst) + " interval error=" + fmt("%.3g", err));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;

  {  // (a) quartic
    SosProgram prog;
    const VarId x = prog.registry().add("x"), y = prog.registry().add("y");
    const Polynomial X = Polynomial::var(x), Y = Polynomial::var(y);
    const Polynomial p = 2.0 * X * X * X * X + 5.0 * Y * Y * Y * Y - X * X * Y * Y;
    prog.add_sos_constraint(AffinePoly(p));
    const SosResult r = prog.solve();
    double res = INFINITY;
    if (r.verdict == Verdict::Feasible) {
      res = max_coeff(gram_polynomial(r.certificate->gram_bases[0], r.certificate->gram[0]) - p);
    }
    ok = ok && res <= kGramResidual;
    detail += "(a) residual=" + fmt("%.2g", res);
  }
  {  // (b) Motzkin
    SosProgram prog;
    const VarId x = prog.registry().add("x"), y = prog.registry().add("y");
    const Polynomial X = Polynomial::var(x), Y = Polynomial::var(y);
    const Polynomial x2 = X * X, y2 = Y * Y;
    const Polynomial m = x2 * x2 * y2 + x2 * y2 * y2 - 3.0 * x2 * y2 + 1.0;
    double lowest = INFINITY;
    for (int i = 0; i <= 400; ++i)
      for (int j = 0; j <= 400; ++j) {
        const std::vector<double> pt = {-2.0 + i * 0.01, -2.0 + j * 0.01};
        lowest = std::min(lowest, m.evaluate(pt));
      }
    prog.add_sos_constraint(AffinePoly(m));
    const Verdict v = prog.solve().verdict;
    ok = ok && v != Verdict::Feasible && lowest >= -1e-12;
    detail += " (b) " + std::string(to_string(v)) + " grid min=" + fmt("%.2g", lowest);
  }
  {  // (c) −x²
    SosProgram prog;
    const Polynomial X = Polynomial::var(prog.registry().add("x"));
    prog.add_sos_constraint(AffinePoly(-(X * X)));
    const Verdict v = prog.solve().verdict;
    ok = ok && v == Verdict::Infeasible;
    detail += " (c) " + std::string(to_string(v));
  }
  {  // (d) random convex combinations of squares
    std::mt19937_64 rng(22);
    int certified = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
      SosProgram prog;
      std::vector<VarId> vars = {prog.registry().add("x"), prog.registry().add("y"), prog.registry().add("z")};
      const Polynomial p = mgsos::testing::random_sos(rng, vars, 2, 12);
      prog.add_sos_constraint(AffinePoly(p));
      const SosResult r = prog.solve();
      if (r.verdict != Verdict::Feasible) continue;
      const double res = max_coeff(gram_polynomial(r.certificate->gram_bases[0], r.certificate->gram[0]) - p);
      worst = std::max(worst, res);
      certified += res <= kGramResidual;
    }
    ok = ok && certified == 50;
    detail += " (d) " + std::to_string(certified) + "/50 worst=" + fmt("%.2g", worst);
  }
  const double t = seconds_since(t0);
  report(5, ok && t < kCrit5Seconds, detail + " time=" + fmt("%.2fs", t));
}

void criterion6() {
  std::mt19937_64 rng(41);
  int certified = 0, violations = 0, instances = 0;
  for (const auto& inst : mgsos::testing::corpus()) {
    ++instances;
    const CertifyReport rep = assess(inst.net, inst.cfg);
    if (rep.zeta != 1) continue;
    ++certified;
    violations += mgsos::testing::soundness_violations(inst.net, rep, rng);
  }
  report(6, violations == 0 && certified > 0,
         "corpus=" + std::to_string(instances) + " certified=" + std::to_string(certified) +
             " violations=" + std::to_string(violations));
}

void criterion7() {
  // Gradient against central differences.
  std::mt19937_64 rng(7);
  VariableRegistry reg;
  const std::vector<VarId> vars = {reg.add("x"), reg.add("y"), reg.add("z")};
  double worst_grad = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Polynomial p = mgsos::testing::random_poly(rng, vars, 4, 8);
    const PolyVector g = gradient(p, vars);
    auto pt = mgsos::testing::random_point(rng, 3);
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const double h = 1e-6;
      auto a = pt, b = pt;
      a[i] += h;
      b[i] -= h;
      const double fd = (p.evaluate(a) - p.evaluate(b)) / (2 * h);
      const double an = g[i].evaluate(pt);
      worst_grad = std::max(worst_grad, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    }
  }

  const MicrogridNetwork net = mgsos::testing::three_bus_suggested();
  auto run = [&](double dt) {
    SimConfig c;
    c.initial_delta = VectorXd::Constant(3, 0.3);
    c.t_end = 4.0;
    c.dt = dt;
    return simulate(net, c).final_state;
  };
  const double h = 0.1;
  const VectorXd ref = run(h / 8);
  const double factor = (run(h) - ref).norm() / (run(h / 2) - ref).norm();

  const MicrogridNetwork orig = mgsos::testing::three_bus();
  const VectorXd d = power_flow(orig, 1, orig.P_star(), 0.0);
  const double pf = (orig.injections(d) - orig.P_star()).tail(2).cwiseAbs().maxCoeff();

  SimConfig c;
  c.initial_delta = VectorXd::Ones(1);
  c.t_end = 1.0;
  const double ex = std::abs(simulate(mgsos::testing::single_bus(1.0), c).final_state(0) - std::exp(-1.0));

  report(7, worst_grad <= kGradRel && factor >= 12.0 && factor <= 20.0 && pf <= kPowerFlowResidual && ex <= kExpTol,
         "grad rel=" + fmt("%.2g", worst_grad) + " rk4 factor=" + fmt("%.2f", factor) + " pf residual=" +
             fmt("%.2g", pf) + " exp error=" + fmt("%.2g", ex));
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mgsos");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

// Every non-manifest file under a and b must match byte for byte.
bool same_outputs(const fs::path& a, const fs::path& b, int& compared) {
  bool ok = true;
  for (const auto& e : fs::directory_iterator(a)) {
    const auto name = e.path().filename();
    if (name == "manifest.json") continue;
    ++compared;
    ok = ok && fs::exists(b / name) && slurp(e.path()) == slurp(b / name);
  }
  return ok;
}

void criterion8() {
  const fs::path root = scratch("c8");
  const std::string bus = (root / "bus.json").string();
  std::ofstream(bus) << R"({"schema_version": 1, "buses": [{"id": 1, "T_a": 1.0, "D_a": 0.1, "V_star": 1.0, "delta_star": 0.0}], "branches": []})";
  const std::string spec = (root / "spec.json").string();
  std::ofstream(spec) << R"({"schema_version": 1, "adjustable": ["T_a1", "D_a1"], "bounds": {"T_a1": [-2, 2], "D_a1": [-2, 2]},
    "trials": 24, "seed": 3, "degrees": {"l_V": 2, "l_sigma1": 2, "l_sigma2": 2}})";

  const std::vector<std::vector<std::string>> commands = {
      {"coordinate", bus, spec},
      {"coordinate", kConfigs + "three_bus_original.json", kConfigs + "coordination.json", "--trials", "6"},
      {"assess", bus, "--deg-v", "2", "--deg-sig1", "2", "--deg-sig2", "2"},
      {"simulate", kConfigs + "three_bus_suggested.json", "--record-every", "100"},
      {"sector", "--y-star", "-0.33"},
  };
  bool ok = true;
  int compared = 0;
  for (std::size_t c = 0; c < commands.size(); ++c) {
    fs::path dirs[2];
    int codes[2];
    for (int t = 0; t < 2; ++t) {
      dirs[t] = root / (std::to_string(c) + "_" + std::to_string(t));
      auto args = commands[c];
      args.insert(args.end(), {"--out", dirs[t].string()});
      if (args[0] == "coordinate") args.insert(args.end(), {"--threads", t == 0 ? "1" : "4"});
      codes[t] = cli(args);
    }
    ok = ok && codes[0] == codes[1] && codes[0] != 1 && same_outputs(dirs[0], dirs[1], compared);
  }
  report(8, ok && compared > 0, "commands=" + std::to_string(commands.size()) + " files compared=" +
                                    std::to_string(compared));
}

}  // namespace

int main() {
  const std::pair<int, void (*)()> all[] = {{1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4},
                                            {5, criterion5}, {6, criterion6}, {7, criterion7}, {8, criterion8}};
  for (const auto& [id, fn] : all) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(id, false, std::string("exception: ") + e.what());
    }
  }
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
