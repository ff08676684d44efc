#include "mgsos/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <cstdio>
#include <ostream>
#include <tuple>

#include "mgsos/error.hpp"

namespace mgsos {

using Eigen::MatrixXd;
using Eigen::VectorXd;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Feasible:
      return "Feasible";
    case Verdict::Infeasible:
      return "Infeasible";
    case Verdict::Unknown:
      return "Unknown";
  }
  return "Unknown";
}

void SdpProblem::validate() const {
  for (std::size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] < 1) throw ProblemError("block " + std::to_string(b) + " has size < 1");
  }
  if (num_free < 0) throw ProblemError("negative free-variable count");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& c = constraints[i];
    const std::string where = "constraint " + std::to_string(i) + ": ";
    if (!std::isfinite(c.rhs)) throw ProblemError(where + "non-finite rhs");
    for (const auto& e : c.entries) {
      if (e.block < 0 || e.block >= static_cast<int>(block_sizes.size())) {
        throw ProblemError(where + "undeclared block " + std::to_string(e.block));
      }
      const int n = block_sizes[e.block];
      if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n) {
        throw ProblemError(where + "entry outside block " + std::to_string(e.block));
      }
      if (e.row > e.col) throw ProblemError(where + "lower-triangle entry");
      if (!std::isfinite(e.coeff)) throw ProblemError(where + "non-finite coefficient");
    }
    for (const auto& f : c.free_terms) {
      if (f.var < 0 || f.var >= num_free) {
        throw ProblemError(where + "undeclared free variable " + std::to_string(f.var));
      }
      if (!std::isfinite(f.coeff)) throw ProblemError(where + "non-finite coefficient");
    }
  }
}

double eigen_min(const MatrixXd& m) {
  if (m.rows() != m.cols()) throw DimensionError("eigen_min: matrix is not square");
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9) {
    throw DimensionError("eigen_min: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double constraint_residual(const SdpProblem& problem, const SdpWitness& w) {
  double worst = 0.0;
  for (const auto& c : problem.constraints) {
    double v = -c.rhs;
    for (const auto& e : c.entries) v += e.coeff * w.blocks.at(e.block)(e.row, e.col);
    for (const auto& f : c.free_terms) v += f.coeff * w.free(f.var);
    worst = std::max(worst, std::abs(v));
  }
  return worst;
}

void write_sparse_text(const SdpProblem& problem, std::ostream& os) {
  os << "blocks";
  for (int n : problem.block_sizes) os << ' ' << n;
  os << "\nfree " << problem.num_free << "\nconstraints " << problem.constraints.size() << '\n';
  os.precision(17);
  for (const auto& c : problem.constraints) {
    for (const auto& e : c.entries) {
      os << e.block << ' ' << e.row << ' ' << e.col << ' ' << e.coeff << ' ';
    }
    os << '|';
    for (const auto& f : c.free_terms) os << ' ' << f.var << ' ' << f.coeff;
    os << " = " << c.rhs << '\n';
  }
}

namespace {

constexpr double kCanonicalZero = 1e-14;

// Entry of a symmetric constraint matrix: value a at (r,c) and (c,r).
struct SymEntry {
  int r;
  int c;
  double a;
};

struct BlockRows {
  std::vector<int> rows;
  std::vector<std::vector<SymEntry>> entries;
};

// Reduced Phase-I problem:
//   min -t  s.t.  <A_i, X> + B_i f = b_i,  X ⪰ 0,  f = (w, t) free.
struct Internal {
  std::vector<int> sizes;
  std::vector<BlockRows> blocks;
  int m = 0;
  MatrixXd B;
  VectorXd b;
  VectorXd c;  // objective on f
  int t_index = 0;
  std::vector<std::vector<int>> components;
  std::vector<std::pair<int, int>> row_slot;  // row -> (component, local index)
  // Reconstruction of the original variables.
  std::vector<int> block_of_original;     // original block -> internal block or -1
  std::vector<std::vector<int>> keep;     // original block -> kept indices
  VectorXd x0;
  MatrixXd N;
};

struct Presolved {
  std::optional<Internal> problem;
  std::string infeasible_reason;
};

Presolved presolve(const SdpProblem& p, const SdpSettings& s) {
  struct PRow {
    std::vector<BlockEntry> entries;
    std::map<int, double> free;
    double rhs;
  };
  std::vector<PRow> rows;
  rows.reserve(p.constraints.size());
  for (const auto& c : p.constraints) {
    std::map<std::tuple<int, int, int>, double> acc;
    for (const auto& e : c.entries) acc[{e.block, e.row, e.col}] += e.coeff;
    PRow r;
    for (const auto& [k, v] : acc) {
      if (v != 0.0) r.entries.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), v});
    }
    for (const auto& f : c.free_terms) r.free[f.var] += f.coeff;
    for (auto it = r.free.begin(); it != r.free.end();) {
      it = it->second == 0.0 ? r.free.erase(it) : std::next(it);
    }
    r.rhs = c.rhs;
    rows.push_back(std::move(r));
  }

  const int nb = static_cast<int>(p.block_sizes.size());
  std::vector<std::vector<char>> alive(nb);
  for (int b = 0; b < nb; ++b) alive[b].assign(p.block_sizes[b], 1);
  auto live = [&](const BlockEntry& e) { return alive[e.block][e.row] && alive[e.block][e.col]; };

  double bscale = 0.0;
  for (const auto& r : rows) bscale = std::max(bscale, std::abs(r.rhs));
  const double zero_tol = 1e-12 * (1.0 + bscale);
  const int nx = p.num_free;

  Presolved out;
  VectorXd x0 = VectorXd::Zero(nx);
  MatrixXd N = MatrixXd::Identity(nx, nx);
  std::size_t n_free_rows = 0;

  // Free variables: x = x0 + N w spans the solutions of the rows that have
  // no live block entry left.
  auto eliminate_free = [&]() -> bool {
    std::vector<const PRow*> free_rows;
    for (const auto& r : rows) {
      if (r.entries.empty() && !r.free.empty()) free_rows.push_back(&r);
    }
    if (free_rows.size() == n_free_rows) return true;
    n_free_rows = free_rows.size();
    MatrixXd G = MatrixXd::Zero(free_rows.size(), nx);
    VectorXd g0(free_rows.size());
    for (std::size_t i = 0; i < free_rows.size(); ++i) {
      for (const auto& [k, v] : free_rows[i]->free) G(i, k) = v;
      g0(i) = free_rows[i]->rhs;
    }
    Eigen::JacobiSVD<MatrixXd> svd(G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double cut = sv.size() ? 1e-12 * std::max(1.0, sv(0)) : 0.0;
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    VectorXd ub = svd.matrixU().leftCols(rank).transpose() * g0;
    for (int i = 0; i < rank; ++i) ub(i) /= sv(i);
    x0 = svd.matrixV().leftCols(rank) * ub;
    if ((G * x0 - g0).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + g0.cwiseAbs().maxCoeff())) {
      out.infeasible_reason = "inconsistent equalities among free variables";
      return false;
    }
    N = svd.matrixV().rightCols(nx - rank);
    return true;
  };

  // A row whose free part is fixed by the other equalities and whose block
  // part is a same-signed sum of diagonal entries: rhs 0 forces those
  // diagonals (and so their rows/cols) to zero; rhs of the opposite sign is
  // infeasible.
  bool changed = true;
  while (changed) {
    changed = false;
    if (!eliminate_free()) return out;
    for (auto& r : rows) {
      std::erase_if(r.entries, [&](const BlockEntry& e) { return !live(e); });
      if (r.entries.empty()) continue;
      double rhs = r.rhs;
      if (!r.free.empty()) {
        Eigen::RowVectorXd gN = Eigen::RowVectorXd::Zero(N.cols());
        double gmax = 0.0;
        for (const auto& [k, v] : r.free) {
          gN += v * N.row(k);
          rhs -= v * x0(k);
          gmax = std::max(gmax, std::abs(v));
        }
        if (gN.size() && gN.cwiseAbs().maxCoeff() > 1e-12 * (1.0 + gmax)) continue;
      }
      const bool all_diag = std::all_of(r.entries.begin(), r.entries.end(),
                                        [](const BlockEntry& e) { return e.row == e.col; });
      if (!all_diag) continue;
      const bool pos = std::all_of(r.entries.begin(), r.entries.end(),
                                   [](const BlockEntry& e) { return e.coeff > 0; });
      const bool neg = std::all_of(r.entries.begin(), r.entries.end(),
                                   [](const BlockEntry& e) { return e.coeff < 0; });
      if (!pos && !neg) continue;
      const double tol = r.free.empty() ? kCanonicalZero : zero_tol;
      if (std::abs(rhs) <= tol) {
        for (const auto& e : r.entries) alive[e.block][e.row] = 0;
        r.entries.clear();
        changed = true;
      } else if ((pos && rhs < 0) || (neg && rhs > 0)) {
        out.infeasible_reason = "diagonal entries of a PSD block forced to a negative value";
        return out;
      }
    }
  }

  Internal in;
  in.x0 = x0;
  in.N = N;
  in.keep.resize(nb);
  in.block_of_original.assign(nb, -1);
  std::vector<std::vector<int>> local(nb);
  for (int b = 0; b < nb; ++b) {
    local[b].assign(p.block_sizes[b], -1);
    for (int i = 0; i < p.block_sizes[b]; ++i) {
      if (alive[b][i]) {
        local[b][i] = static_cast<int>(in.keep[b].size());
        in.keep[b].push_back(i);
      }
    }
    if (!in.keep[b].empty()) {
      in.block_of_original[b] = static_cast<int>(in.sizes.size());
      in.sizes.push_back(static_cast<int>(in.keep[b].size()));
    }
  }

  std::vector<const PRow*> block_rows;
  for (const auto& r : rows) {
    if (r.entries.empty() && r.free.empty()) {
      if (std::abs(r.rhs) > zero_tol) {
        out.infeasible_reason = "constraint with no variables has nonzero right-hand side";
        return out;
      }
    } else if (!r.entries.empty()) {
      block_rows.push_back(&r);
    }
  }

  const int nw = static_cast<int>(in.N.cols());
  const int nf = nw + 1;
  in.t_index = nw;

  // Internal blocks: reduced originals followed by the 1x1 cap slack.
  const int cap_block = static_cast<int>(in.sizes.size());
  in.sizes.push_back(1);
  in.blocks.resize(in.sizes.size());
  in.m = static_cast<int>(block_rows.size()) + 1;
  in.B = MatrixXd::Zero(in.m, nf);
  in.b = VectorXd::Zero(in.m);
  in.c = VectorXd::Zero(nf);
  in.c(in.t_index) = -1.0;

  for (int i = 0; i < static_cast<int>(block_rows.size()); ++i) {
    const PRow& r = *block_rows[i];
    std::map<int, std::vector<SymEntry>> per_block;
    double trace = 0.0;
    for (const auto& e : r.entries) {
      const int k = in.block_of_original[e.block];
      const int li = local[e.block][e.row];
      const int lj = local[e.block][e.col];
      const double a = li == lj ? e.coeff : 0.5 * e.coeff;
      per_block[k].push_back({li, lj, a});
      if (li == lj) trace += e.coeff;
    }
    for (auto& [k, es] : per_block) {
      in.blocks[k].rows.push_back(i);
      in.blocks[k].entries.push_back(std::move(es));
    }
    double shift = 0.0;
    for (const auto& [k, v] : r.free) {
      in.B.row(i).head(nw) += v * in.N.row(k);
      shift += v * in.x0(k);
    }
    in.B(i, in.t_index) = trace;
    in.b(i) = r.rhs - shift;
  }
  const int cap_row = in.m - 1;
  in.blocks[cap_block].rows.push_back(cap_row);
  in.blocks[cap_block].entries.push_back({{0, 0, 1.0}});
  in.B(cap_row, in.t_index) = 1.0;
  in.b(cap_row) = s.slack_cap;

  // Rows sharing a block couple in the Schur complement.
  std::vector<int> parent(in.m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& bl : in.blocks) {
    for (std::size_t j = 1; j < bl.rows.size(); ++j) {
      int a = find(bl.rows[0]), c = find(bl.rows[j]);
      if (a != c) parent[std::max(a, c)] = std::min(a, c);
    }
  }
  std::map<int, int> comp_id;
  in.row_slot.resize(in.m);
  for (int i = 0; i < in.m; ++i) {
    const int root = find(i);
    auto [it, inserted] = comp_id.try_emplace(root, static_cast<int>(in.components.size()));
    if (inserted) in.components.emplace_back();
    in.row_slot[i] = {it->second, static_cast<int>(in.components[it->second].size())};
    in.components[it->second].push_back(i);
  }
  out.problem = std::move(in);
  return out;
}

double inner(const std::vector<MatrixXd>& a, const std::vector<MatrixXd>& b) {
  double v = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) v += a[k].cwiseProduct(b[k]).sum();
  return v;
}

MatrixXd sym(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

class Solver {
 public:
  Solver(const Internal& in, const SdpSettings& s) : in_(in), s_(s) {}

  VectorXd apply_A(const std::vector<MatrixXd>& X) const {
    VectorXd v = VectorXd::Zero(in_.m);
    for (std::size_t k = 0; k < in_.blocks.size(); ++k) {
      const auto& bl = in_.blocks[k];
      for (std::size_t j = 0; j < bl.rows.size(); ++j) {
        double acc = 0.0;
        for (const auto& e : bl.entries[j]) {
          acc += e.r == e.c ? e.a * X[k](e.r, e.c) : e.a * (X[k](e.r, e.c) + X[k](e.c, e.r));
        }
        v(bl.rows[j]) += acc;
      }
    }
    return v;
  }

  MatrixXd apply_At(const VectorXd& y, std::size_t k) const {
    MatrixXd m = MatrixXd::Zero(in_.sizes[k], in_.sizes[k]);
    const auto& bl = in_.blocks[k];
    for (std::size_t j = 0; j < bl.rows.size(); ++j) {
      const double yj = y(bl.rows[j]);
      for (const auto& e : bl.entries[j]) {
        m(e.r, e.c) += yj * e.a;
        if (e.r != e.c) m(e.c, e.r) += yj * e.a;
      }
    }
    return m;
  }

  // M_ij = <A_i, X A_j S^{-1}> per component; false on factorization failure.
  bool build_schur(const std::vector<MatrixXd>& X, const std::vector<MatrixXd>& Sinv) {
    const auto& comps = in_.components;
    std::vector<MatrixXd> M(comps.size());
    for (std::size_t c = 0; c < comps.size(); ++c) {
      M[c] = MatrixXd::Zero(comps[c].size(), comps[c].size());
    }
    for (std::size_t k = 0; k < in_.blocks.size(); ++k) {
      const auto& bl = in_.blocks[k];
      const int n = in_.sizes[k];
      MatrixXd G(n, n);
      for (std::size_t j = 0; j < bl.rows.size(); ++j) {
        G.setZero();
        for (const auto& e : bl.entries[j]) {
          G.noalias() += e.a * X[k].col(e.r) * Sinv[k].row(e.c);
          if (e.r != e.c) G.noalias() += e.a * X[k].col(e.c) * Sinv[k].row(e.r);
        }
        const auto [cj, lj] = in_.row_slot[bl.rows[j]];
        for (std::size_t i = 0; i <= j; ++i) {
          double acc = 0.0;
          for (const auto& e : bl.entries[i]) {
            acc += e.r == e.c ? e.a * G(e.r, e.r) : e.a * (G(e.r, e.c) + G(e.c, e.r));
          }
          const int li = in_.row_slot[bl.rows[i]].second;
          M[cj](li, lj) += acc;
          if (li != lj) M[cj](lj, li) += acc;
        }
      }
    }
    chol_.clear();
    for (auto& Mc : M) {
      const double scale = std::max(1.0, Mc.diagonal().cwiseAbs().maxCoeff());
      Eigen::LLT<MatrixXd> llt(Mc);
      double reg = s_.regularization * scale;
      for (int attempt = 0; llt.info() != Eigen::Success && attempt < 6; ++attempt) {
        MatrixXd Mr = Mc;
        Mr.diagonal().array() += reg;
        llt.compute(Mr);
        reg *= 100.0;
      }
      if (llt.info() != Eigen::Success) return false;
      chol_.push_back(std::move(llt));
    }
    // Free-variable Schur complement K = Bᵀ M⁻¹ B.
    MinvB_ = solve_M(in_.B);
    MatrixXd K = in_.B.transpose() * MinvB_;
    K = sym(K);
    const double kscale = std::max(1.0, K.diagonal().cwiseAbs().maxCoeff());
    K.diagonal().array() += s_.regularization * kscale;
    kfac_.compute(K);
    return kfac_.info() == Eigen::Success;
  }

  MatrixXd solve_M(const MatrixXd& rhs) const {
    MatrixXd out(rhs.rows(), rhs.cols());
    const auto& comps = in_.components;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      MatrixXd sub(comps[c].size(), rhs.cols());
      for (std::size_t i = 0; i < comps[c].size(); ++i) sub.row(i) = rhs.row(comps[c][i]);
      sub = chol_[c].solve(sub);
      for (std::size_t i = 0; i < comps[c].size(); ++i) out.row(comps[c][i]) = sub.row(i);
    }
    return out;
  }

  // Solves M dy + B df = h, Bᵀ dy = rf.
  void solve_kkt(const VectorXd& h, const VectorXd& rf, VectorXd& dy, VectorXd& df) const {
    VectorXd Minvh = solve_M(h);
    df = kfac_.solve(in_.B.transpose() * Minvh - rf);
    dy = Minvh - MinvB_ * df;
  }

 private:
  const Internal& in_;
  const SdpSettings& s_;
  std::vector<Eigen::LLT<MatrixXd>> chol_;
  MatrixXd MinvB_;
  Eigen::LDLT<MatrixXd> kfac_;
};

// Largest step keeping X + a·dX positive semidefinite (inf if unbounded).
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  MatrixXd Y = llt.matrixL().solve(dX);
  MatrixXd W = llt.matrixL().solve(Y.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(W), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

}  // namespace

SdpOutcome solve_feasibility(const SdpProblem& problem, const SdpSettings& settings) {
  problem.validate();
  SdpOutcome out;
  Presolved pre = presolve(problem, settings);
  if (!pre.problem) {
    out.verdict = Verdict::Infeasible;
    out.margin = -std::numeric_limits<double>::infinity();
    out.status = "presolve: " + pre.infeasible_reason;
    return out;
  }
  const Internal& in = *pre.problem;
  const std::size_t K = in.sizes.size();
  const int nf = static_cast<int>(in.B.cols());
  int ntot = 0;
  for (int n : in.sizes) ntot += n;

  // Infeasible-start point in the style of SDPT3.
  double xi = std::max(10.0, std::sqrt(static_cast<double>(*std::max_element(in.sizes.begin(), in.sizes.end()))));
  for (std::size_t k = 0; k < K; ++k) {
    const auto& bl = in.blocks[k];
    for (std::size_t j = 0; j < bl.rows.size(); ++j) {
      double nrm = 0.0;
      for (const auto& e : bl.entries[j]) nrm += (e.r == e.c ? 1.0 : 2.0) * e.a * e.a;
      nrm = std::sqrt(nrm);
      xi = std::max(xi, in.sizes[k] * (1.0 + std::abs(in.b(bl.rows[j]))) / (1.0 + nrm));
    }
  }
  const double eta = std::max(10.0, std::sqrt(static_cast<double>(ntot)));
  std::vector<MatrixXd> X(K), S(K), Sinv(K), Rd(K);
  for (std::size_t k = 0; k < K; ++k) {
    X[k] = xi * MatrixXd::Identity(in.sizes[k], in.sizes[k]);
    S[k] = eta * MatrixXd::Identity(in.sizes[k], in.sizes[k]);
  }
  VectorXd y = VectorXd::Zero(in.m);
  VectorXd f = VectorXd::Zero(nf);

  Solver solver(in, settings);
  const double bnorm = in.b.cwiseAbs().maxCoeff();
  const double cnorm = in.c.cwiseAbs().maxCoeff();

  auto make_witness = [&](const VectorXd& fv) {
    SdpWitness w;
    const double t = fv(in.t_index);
    w.free = in.x0 + in.N * fv.head(in.t_index);
    w.blocks.resize(problem.block_sizes.size());
    for (std::size_t b = 0; b < problem.block_sizes.size(); ++b) {
      w.blocks[b] = MatrixXd::Zero(problem.block_sizes[b], problem.block_sizes[b]);
      const int k = in.block_of_original[b];
      if (k < 0) continue;
      const auto& keep = in.keep[b];
      for (std::size_t i = 0; i < keep.size(); ++i) {
        for (std::size_t j = 0; j < keep.size(); ++j) {
          w.blocks[b](keep[i], keep[j]) = X[k](i, j) + (i == j ? t : 0.0);
        }
      }
      w.blocks[b] = sym(w.blocks[b]);
    }
    return w;
  };

  int stalled = 0;
  double best_relp = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (int iter = 0;; ++iter) {
    out.iterations = iter;
    const VectorXd rp = in.b - solver.apply_A(X) - in.B * f;
    double rd_norm = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      Rd[k] = -solver.apply_At(y, k) - S[k];
      rd_norm = std::max(rd_norm, Rd[k].cwiseAbs().maxCoeff());
    }
    const VectorXd rf = in.c - in.B.transpose() * y;
    rd_norm = std::max(rd_norm, rf.cwiseAbs().maxCoeff());
    const double mu = inner(X, S) / ntot;
    const double pobj = in.c.dot(f);
    const double dobj = in.b.dot(y);
    const double relp = rp.cwiseAbs().maxCoeff() / (1.0 + bnorm);
    const double reld = rd_norm / (1.0 + cnorm);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double t = f(in.t_index);

    if (settings.trace) {
      std::fprintf(stderr, "%3d t=% .3e pobj=% .3e dobj=% .3e relp=%.1e reld=%.1e gap=%.1e mu=%.1e\n",
                   iter, t, pobj, dobj, relp, reld, gap, mu);
    }
    if (!std::isfinite(mu) || !std::isfinite(relp) || !std::isfinite(reld)) {
      out.status = "numerical breakdown (non-finite iterate)";
      out.margin = t;
      return out;
    }
    if (t >= settings.feasibility_margin && relp <= 10 * settings.tolerance) {
      SdpWitness w = make_witness(f);
      const double res = constraint_residual(problem, w);
      double emin = std::numeric_limits<double>::infinity();
      for (const auto& blk : w.blocks) emin = std::min(emin, eigen_min(blk));
      if (res <= settings.witness_residual_tol && emin >= -settings.witness_eig_tol) {
        out.verdict = Verdict::Feasible;
        out.margin = t;
        out.residual = res;
        out.witness = std::move(w);
        out.status = "feasible";
        return out;
      }
    }
    // Weak duality: t ≤ -bᵀy for any dual-feasible y.
    if (reld <= settings.tolerance && -dobj < -settings.feasibility_margin) {
      out.verdict = Verdict::Infeasible;
      out.margin = -dobj;
      out.status = "infeasible (dual bound)";
      return out;
    }
    if (relp <= settings.tolerance && reld <= settings.tolerance && gap <= settings.tolerance) {
      out.margin = t;
      out.status = t >= settings.feasibility_margin ? "converged but witness failed re-check"
                                                    : "converged with |t*| below the margin";
      return out;
    }
    // Without an interior the iterates drift off the affine set once μ is tiny.
    best_relp = std::min(best_relp, relp);
    if (best_relp < 1e-6 && relp > 100.0 * std::max(best_relp, settings.tolerance)) {
      out.margin = best_t;
      out.status = "numerical breakdown (lost primal feasibility)";
      return out;
    }
    if (relp <= 10.0 * std::max(best_relp, settings.tolerance)) best_t = t;
    if (iter >= settings.max_iters) {
      out.margin = t;
      out.status = "iteration limit";
      return out;
    }

    bool ok = true;
    for (std::size_t k = 0; k < K && ok; ++k) {
      Eigen::LLT<MatrixXd> llt(S[k]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      Sinv[k] = llt.solve(MatrixXd::Identity(in.sizes[k], in.sizes[k]));
      Sinv[k] = sym(Sinv[k]);
    }
    if (!ok || !solver.build_schur(X, Sinv)) {
      out.margin = t;
      out.status = "numerical breakdown (factorization)";
      return out;
    }

    std::vector<MatrixXd> dX(K), dS(K);
    VectorXd dy, df;
    auto direction = [&](double sigma_mu, const std::vector<MatrixXd>* cX,
                         const std::vector<MatrixXd>* cS) {
      std::vector<MatrixXd> Rc(K), T(K);
      for (std::size_t k = 0; k < K; ++k) {
        Rc[k] = -X[k] * S[k];
        Rc[k].diagonal().array() += sigma_mu;
        if (cX) Rc[k] -= (*cX)[k] * (*cS)[k];
        T[k] = (Rc[k] - X[k] * Rd[k]) * Sinv[k];
      }
      const VectorXd h = rp - solver.apply_A(T);
      solver.solve_kkt(h, rf, dy, df);
      for (std::size_t k = 0; k < K; ++k) {
        dS[k] = Rd[k] - solver.apply_At(dy, k);
        dX[k] = sym((Rc[k] - X[k] * dS[k]) * Sinv[k]);
      }
    };
    auto steps = [&](double frac, double& ap, double& ad) {
      ap = ad = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < K; ++k) {
        ap = std::min(ap, max_step(X[k], dX[k]));
        ad = std::min(ad, max_step(S[k], dS[k]));
      }
      ap = std::min(1.0, frac * ap);
      ad = std::min(1.0, frac * ad);
    };

    double ap = 0, ad = 0;
    direction(0.0, nullptr, nullptr);
    steps(1.0, ap, ad);
    double mu_aff = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      mu_aff += (X[k] + ap * dX[k]).cwiseProduct(S[k] + ad * dS[k]).sum();
    }
    mu_aff /= ntot;
    const double ratio = std::max(0.0, mu_aff / mu);
    const double sigma = std::min(settings.barrier_reduction, ratio * ratio * ratio);
    const std::vector<MatrixXd> aX = dX, aS = dS;
    direction(sigma * mu, &aX, &aS);
    steps(settings.step_fraction, ap, ad);

    for (std::size_t k = 0; k < K; ++k) {
      X[k] = sym(X[k] + ap * dX[k]);
      S[k] = sym(S[k] + ad * dS[k]);
    }
    f += ap * df;
    y += ad * dy;
    stalled = std::max(ap, ad) < 1e-10 ? stalled + 1 : 0;
    if (stalled >= 5) {
      out.margin = f(in.t_index);
      out.status = "numerical breakdown (stalled)";
      out.iterations = iter + 1;
      return out;
    }
  }
}

}  // namespace mgsos
