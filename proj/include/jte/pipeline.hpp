#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "jte/kinematics.hpp"
#include "jte/nlp.hpp"
#include "jte/verify.hpp"

namespace jte {

// Config file is unreadable, malformed, or violates the schema. The message
// lists every violated invariant, not only the first.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// The reference configuration already violates a constraint; no tolerance
// exists. Names the offending constraint.
struct InfeasibleReferenceError : std::runtime_error {
  explicit InfeasibleReferenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct VerifyOptions {
  int samples = 10000;  // 0 disables the verification block
  std::uint64_t seed = 0;
  int grid_per_axis = 17;
  double oracle_tol = 1e-4;
};

struct ProblemSpec {
  std::string name;
  RobotModel robot;
  Eigen::VectorXd reference;
  std::vector<HalfPlaneConstraint> constraints;
  int cone_order = 2;
  SolverOptions solver;
  VerifyOptions verify;
};

struct ConstraintResult {
  std::string name;
  double lambda = 0.0;  // certified bound; 0 when no certificate was found
  SolveStatus status = SolveStatus::infeasible;
  bool certified = false;
  bool structurally_blocked = false;  // sign analysis ruled out any certificate
  int backoff_count = 0;
  double min_eigenvalue = 0.0;
  int iterations = 0;
  double wall_seconds = 0.0;
  bool verified = false;  // the sampling block ran (samples > 0 and certified)
  int violations = 0;
  double min_f = 0.0;
  double bound_excess = 0.0;  // max over samples of g - f
  bool oracle_ran = false;    // ground truth runs whenever samples > 0
  double oracle_lo = 0.0;
  double oracle_hi = 0.0;
  std::vector<std::string> warnings;
};

struct ToleranceReport {
  std::string instance;
  int cone_order = 2;
  std::uint64_t seed = 0;
  int samples = 0;
  std::vector<ConstraintResult> constraints;
  double lambda_min = 0.0;
  bool combined_verified = false;
  int combined_violations = 0;
  double combined_min_f = 0.0;
  bool all_failed = false;
  std::vector<std::string> warnings;  // instance-level, includes per-constraint ones
};

enum class ReportFormat { text_table, tsv, json_doc };

// Parses and validates a JSON problem description; fills defaults
// (cone_order 2, samples 10000, seed 0). Angles are radians only.
ProblemSpec load_config(const std::string& path);
ProblemSpec parse_config(const std::string& text, const std::string& origin);

// Runs the full certificate pipeline per constraint, then verification and
// the combiner. `trace` (optional) receives one line per pipeline stage.
// A constraint without a certificate contributes lambda 0 and a warning; the
// report is marked all_failed only when no constraint certifies.
ToleranceReport run_pipeline(const ProblemSpec& spec, std::ostream* trace = nullptr);

void emit_report(const ToleranceReport& report, ReportFormat format, std::ostream& os);

// Exit-code contract: 0 certified everywhere with no warnings, 2 when any
// warning was recorded, 3 when nothing certified.
int report_exit_code(const ToleranceReport& report);

const char* status_name(SolveStatus s);

}  // namespace jte
