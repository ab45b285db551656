#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "jte/kinematics.hpp"

namespace jte {

struct SampleReport {
  int samples = 0;
  int violations = 0;  // samples with min-over-constraints f < 0
  double min_f = 0.0;
  Eigen::VectorXd argmin;  // configuration attaining min_f, re-evaluable
  std::uint64_t seed = 0;
};

struct SampleRow {
  int id = 0;
  Eigen::VectorXd x;
  double f_min = 0.0;
};

struct OracleEstimate {
  double lambda_hat = 0.0;
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  int grid_per_axis = 0;
};

// Draws N configurations uniformly in the hypercube |x - xr|_inf <= lambda
// and evaluates the true trigonometric distance for every constraint. The
// corner-biased mode snaps coordinates toward the cube corners and exists
// only for adversarial probing. Identical seeds reproduce the report bit for
// bit; rows, when requested, receive one entry per sample in draw order.
SampleReport sample_check(const std::vector<HalfPlaneConstraint>& constraints,
                          const RobotModel& robot, const Eigen::VectorXd& xr,
                          double lambda, int N, std::uint64_t seed,
                          bool corner_biased = false,
                          std::vector<SampleRow>* rows = nullptr);

// Minimum of true f over the regular grid with `grid_per_axis` points per
// joint spanning the hypercube of radius lambda; the 2^n corners are always
// grid points. This is the oracle's inner feasibility probe.
double grid_min_f(const HalfPlaneConstraint& c, const RobotModel& robot,
                  const Eigen::VectorXd& xr, double lambda, int grid_per_axis);

// Bisection estimate of the true tolerance: largest lambda whose grid probe
// stays nonnegative. Throws std::domain_error when f(xr) <= 0; caps at
// lambda_max and reports a collapsed bracket when the constraint never
// activates inside the search range.
OracleEstimate oracle_lambda(const HalfPlaneConstraint& c, const RobotModel& robot,
                             const Eigen::VectorXd& xr, int grid_per_axis, double tol,
                             double lambda_max = kSmallAngleLimit);

// Empirical audit of the polynomial bound: samples (y, l) with |y|_inf <= 1,
// l in [0, lambda], and returns max over samples of g(y, l) - f(xr + y l).
// A nonpositive result means the bound property held on every sample. The
// polynomial overload lets callers audit a mutated or externally supplied g.
double check_lower_bound(const HalfPlaneConstraint& c, const RobotModel& robot,
                         const Eigen::VectorXd& xr, double lambda, int N,
                         std::uint64_t seed);
double check_lower_bound(const Polynomial& g, const DeviationVars& dev,
                         const HalfPlaneConstraint& c, const RobotModel& robot,
                         const Eigen::VectorXd& xr, double lambda, int N,
                         std::uint64_t seed);

// Multi-constraint combiner: the joint tolerance is the worst single bound.
// Throws std::invalid_argument on an empty list or a negative entry.
double combine_constraints(const std::vector<double>& lambdas);

// CSV emission: header sample_id,x_1..x_n,f_min_over_constraints, full
// precision so every row can be re-evaluated.
void write_samples_csv(std::ostream& os, const std::vector<SampleRow>& rows);

}  // namespace jte
