#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "jte/sos.hpp"

namespace jte {

struct SolverOptions {
  int max_iter = 4000;       // inner iteration budget for the whole solve
  double outer_tol = 1e-8;   // stop when lambda stops moving between barrier rounds
  double mu0 = 1.0;          // initial barrier weight
  double mu_factor = 0.2;    // barrier reduction per outer round
  double mu_floor = 1e-12;
  double feas_tol = 1e-8;    // allowed minor slack at acceptance
  double psd_tol = 1e-8;     // eigenvalue tolerance of the certificate check
  double lambda0 = 1e-3;     // initial tolerance seed
  // The bound-generator multiplier is held at this fixed scale (<= 0 leaves
  // it free). The achievable lambda grows with the multiplier scale and the
  // supremum is only reached in the limit, so leaving the scale free sends
  // the solver down an unbounded ray where the remaining multipliers stop
  // rebalancing. Pinning the scale keeps the feasible set bounded at a
  // lambda cost of order 1 / (clearance * alpha_gauge).
  double alpha_gauge = 1e5;
  int backoff_rounds = 10;
  double backoff_factor = 0.95;
  std::uint64_t seed = 0;    // reserved; the solver path is deterministic
  bool trace = false;
};

enum class SolveStatus { converged, max_iter, infeasible };

struct NlpSolution {
  double lambda = 0.0;
  Eigen::VectorXd alpha;  // one entry per cone term, clamped entries stay 0
  SolveStatus status = SolveStatus::infeasible;
  int iterations = 0;
  std::vector<double> objective_trace;  // lambda after each barrier round
  int backoff_count = 0;
  double min_eigenvalue = 0.0;
  bool certified = false;
  // Set when sign analysis proves no certificate exists at this cone order:
  // some Gram row can never hold a positive diagonal yet must carry weight.
  bool structurally_blocked = false;
  int blocked_row = -1;
};

// Gram entries flattened to numeric terms coeff * lambda^lpow * alpha_a.
// Decision coordinate 0 is lambda, 1 + a is multiplier a.
struct CompiledGram {
  struct Term {
    int row, col;  // row <= col
    int alpha;     // multiplier index, -1 for multiplier-free terms
    int lpow;
    double coeff;
  };
  int dim = 0;
  int nalpha = 0;
  std::vector<Term> terms;
  std::vector<int> subset_size;  // cone subset cardinality per multiplier
  int bound_alpha = -1;          // multiplier attached to the bound generator alone

  Eigen::MatrixXd assemble(double lambda, const Eigen::VectorXd& alpha) const;
  // dQ/dc for decision coordinate: 0 -> lambda, 1 + a -> alpha_a.
  Eigen::MatrixXd assemble_derivative(double lambda, const Eigen::VectorXd& alpha,
                                      int coord) const;
};

CompiledGram compile_gram(const GramProblem& gp, const std::vector<ConeTerm>& cone,
                          VarId lambda_id);

// Determinants of all leading principal minors from one elimination pass
// without pivoting; a zero pivot makes every later minor 0. Values saturate
// at +-1e300 instead of overflowing.
Eigen::VectorXd leading_minors(const Eigen::MatrixXd& Q);

Eigen::VectorXd eval_minors(const CompiledGram& g, double lambda,
                            const Eigen::VectorXd& alpha);

// True when every leading minor exceeds -tol. Uses log-magnitude pivots, so
// the answer is exact even where leading_minors saturates.
bool minors_nonnegative(const CompiledGram& g, double lambda, const Eigen::VectorXd& alpha,
                        double tol);

// Sign propagation over the Gram sparsity pattern, run to a fixpoint:
//  - a multiplier whose every diagonal appearance on some row is negative,
//    with no positive channel left on that row, must be zero;
//  - a row whose diagonal is identically zero must vanish entirely, so every
//    multiplier loading it off-diagonally must be zero as well;
//  - if such a row is loaded by a term that cannot be clamped (a constant, or
//    the bound generator multiplier, which the constant row forces strictly
//    positive), no certificate exists at this cone order: impossible is set
//    and blocked_row names a witness row.
// alive lists the rows that keep a positive diagonal channel; the barrier
// optimizes over that principal submatrix, which is exact because the dead
// rows are identically zero. active_rows is the length of the leading alive
// prefix, kept as a diagnostic. The final eigenvalue check still polices the
// assembled matrix.
struct FaceAnalysis {
  std::vector<char> clamped;  // per multiplier
  std::vector<int> alive;     // rows with a live positive diagonal channel, ascending
  bool impossible = false;
  int blocked_row = -1;
  int active_rows = 0;
};

FaceAnalysis analyze_certificate_face(const CompiledGram& g);

// Interior-point solve of: maximize lambda subject to leading minors >= 0,
// alpha >= 0, lambda >= 0. Log-barrier with quasi-Newton inner steps and
// central finite-difference gradients; deterministic.
NlpSolution solve_nlp(const CompiledGram& g, const SolverOptions& opts);

// Smallest eigenvalue of a symmetric matrix via tridiagonal reduction and
// Sturm-count bisection.
double min_symmetric_eigenvalue(const Eigen::MatrixXd& Q);

struct PsdCheck {
  bool certified = false;
  double min_eigenvalue = 0.0;
};

// Minimum eigenvalue of the full Gram matrix at the solution; certified iff
// it is >= -tol. Nonnegative leading minors alone do not imply this.
PsdCheck post_check_psd(const CompiledGram& g, const NlpSolution& sol, double tol);

// Accepts the solution if the eigenvalue check and the minor slack pass;
// otherwise shrinks lambda by backoff_factor, re-centers the multipliers at
// the frozen lambda, and retries. Never returns a rejected lambda.
NlpSolution certify_with_backoff(const CompiledGram& g, NlpSolution sol,
                                 const SolverOptions& opts);

}  // namespace jte
