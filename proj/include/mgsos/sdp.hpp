#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mgsos {

/// coeff·X_b(row, col) with row ≤ col; the symmetric partner is implied.
struct BlockEntry {
  int block = 0;
  int row = 0;
  int col = 0;
  double coeff = 0.0;
};

struct FreeTerm {
  int var = 0;
  double coeff = 0.0;
};

/// Σ entries + Σ free_terms = rhs.
struct SdpConstraint {
  std::vector<BlockEntry> entries;
  std::vector<FreeTerm> free_terms;
  double rhs = 0.0;
};

/// Block-diagonal semidefinite feasibility instance.
struct SdpProblem {
  std::vector<int> block_sizes;
  int num_free = 0;
  std::vector<SdpConstraint> constraints;

  /// Throws ProblemError on out-of-range or lower-triangle references.
  void validate() const;
};

enum class Verdict { Feasible, Infeasible, Unknown };

const char* to_string(Verdict v);

struct SdpWitness {
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd free;
};

struct SdpOutcome {
  Verdict verdict = Verdict::Unknown;
  std::optional<SdpWitness> witness;
  /// Achieved eigenvalue slack t*. -inf when presolve proves infeasibility.
  double margin = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  /// Max equality violation of the returned witness (NaN without witness).
  double residual = std::numeric_limits<double>::quiet_NaN();
  std::string status;
};

struct SdpSettings {
  int max_iters = 200;
  double feasibility_margin = 1e-7;
  /// Upper bound on the Mehrotra centering parameter.
  double barrier_reduction = 0.5;
  double regularization = 1e-12;
  /// t is capped here so feasible problems have a bounded Phase-I optimum.
  double slack_cap = 1.0;
  double tolerance = 1e-9;
  double step_fraction = 0.95;
  double witness_eig_tol = 1e-7;
  double witness_residual_tol = 1e-6;
  /// Print one line per iteration to stderr.
  bool trace = false;
};

/// Maximizes t subject to every block ⪰ t·I and all equalities, with a
/// primal-dual path-following method (HKM direction, Mehrotra
/// predictor-corrector). Blocks whose diagonal is forced to zero by a
/// constraint are reduced to their non-trivial face first.
SdpOutcome solve_feasibility(const SdpProblem& problem, const SdpSettings& settings = {});

/// Smallest eigenvalue of a symmetric matrix; throws ProblemError if the
/// input is asymmetric beyond 1e-9.
double eigen_min(const Eigen::MatrixXd& m);

/// Max |lhs - rhs| over all constraints for the given assignment.
double constraint_residual(const SdpProblem& problem, const SdpWitness& w);

/// One line per constraint: "b i j coeff ... | f k coeff ... = rhs".
void write_sparse_text(const SdpProblem& problem, std::ostream& os);

}  // namespace mgsos
