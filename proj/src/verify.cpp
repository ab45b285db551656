#include "jte/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace jte {

namespace {

// Top 53 bits of the engine output; fixed mapping so a seed reproduces the
// same stream on every platform, unlike std::uniform_real_distribution.
struct Uniform {
  std::mt19937_64 eng;
  explicit Uniform(std::uint64_t seed) : eng(seed) {}
  double next() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double symmetric() { return 2.0 * next() - 1.0; }
};

double min_over_constraints(const std::vector<HalfPlaneConstraint>& constraints,
                            const RobotModel& robot, const Eigen::VectorXd& x) {
  double fmin = std::numeric_limits<double>::infinity();
  for (const auto& c : constraints) fmin = std::min(fmin, eval_constraint(c, robot, x));
  return fmin;
}

}  // namespace

SampleReport sample_check(const std::vector<HalfPlaneConstraint>& constraints,
                          const RobotModel& robot, const Eigen::VectorXd& xr,
                          double lambda, int N, std::uint64_t seed, bool corner_biased,
                          std::vector<SampleRow>* rows) {
  if (lambda < 0.0) throw std::invalid_argument("sample_check: negative tolerance");
  if (N < 1) throw std::invalid_argument("sample_check: sample count must be positive");
  if (constraints.empty()) throw std::invalid_argument("sample_check: no constraints");

  int n = robot.dof();
  Uniform rng(seed);
  SampleReport rep;
  rep.samples = N;
  rep.seed = seed;
  rep.min_f = std::numeric_limits<double>::infinity();
  if (rows != nullptr) {
    rows->clear();
    rows->reserve(static_cast<size_t>(N));
  }

  Eigen::VectorXd x(n);
  for (int s = 0; s < N; ++s) {
    for (int i = 0; i < n; ++i) {
      double y;
      if (corner_biased) {
        double u = rng.next();
        if (u < 0.25)
          y = -1.0;
        else if (u < 0.5)
          y = 1.0;
        else
          y = rng.symmetric();
      } else {
        y = rng.symmetric();
      }
      x[i] = xr[i] + y * lambda;
    }
    double f = min_over_constraints(constraints, robot, x);
    if (f < 0.0) ++rep.violations;
    if (f < rep.min_f) {
      rep.min_f = f;
      rep.argmin = x;
    }
    if (rows != nullptr) rows->push_back({s, x, f});
  }
  return rep;
}

double grid_min_f(const HalfPlaneConstraint& c, const RobotModel& robot,
                  const Eigen::VectorXd& xr, double lambda, int grid_per_axis) {
  if (grid_per_axis < 2) throw std::invalid_argument("grid_min_f: need at least 2 points per axis");
  int n = robot.dof();
  double fmin = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<size_t>(n), 0);
  Eigen::VectorXd x(n);
  while (true) {
    for (int i = 0; i < n; ++i) {
      double t = static_cast<double>(idx[static_cast<size_t>(i)]) / (grid_per_axis - 1);
      x[i] = xr[i] + lambda * (2.0 * t - 1.0);
    }
    fmin = std::min(fmin, eval_constraint(c, robot, x));
    int i = 0;
    for (; i < n; ++i) {
      if (++idx[static_cast<size_t>(i)] < grid_per_axis) break;
      idx[static_cast<size_t>(i)] = 0;
    }
    if (i == n) break;
  }
  return fmin;
}

OracleEstimate oracle_lambda(const HalfPlaneConstraint& c, const RobotModel& robot,
                             const Eigen::VectorXd& xr, int grid_per_axis, double tol,
                             double lambda_max) {
  if (eval_constraint(c, robot, xr) <= 0.0)
    throw std::domain_error("oracle_lambda: reference configuration is not strictly safe");
  if (tol <= 0.0) throw std::invalid_argument("oracle_lambda: tolerance must be positive");

  OracleEstimate est;
  est.grid_per_axis = grid_per_axis;
  if (grid_min_f(c, robot, xr, lambda_max, grid_per_axis) >= 0.0) {
    est.lambda_lo = est.lambda_hi = est.lambda_hat = lambda_max;
    return est;
  }
  double lo = 0.0, hi = lambda_max;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (grid_min_f(c, robot, xr, mid, grid_per_axis) >= 0.0)
      lo = mid;
    else
      hi = mid;
  }
  est.lambda_lo = lo;
  est.lambda_hi = hi;
  est.lambda_hat = 0.5 * (lo + hi);
  return est;
}

double check_lower_bound(const Polynomial& g, const DeviationVars& dev,
                         const HalfPlaneConstraint& c, const RobotModel& robot,
                         const Eigen::VectorXd& xr, double lambda, int N,
                         std::uint64_t seed) {
  if (lambda < 0.0 || lambda > kSmallAngleLimit)
    throw std::invalid_argument("check_lower_bound: tolerance outside the small-angle region");
  if (N < 1) throw std::invalid_argument("check_lower_bound: sample count must be positive");

  int n = robot.dof();
  Uniform rng(seed);
  std::vector<double> pt(static_cast<size_t>(dev.lambda) + 1, 0.0);
  Eigen::VectorXd x(n);
  double worst = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < N; ++s) {
    double l = lambda * rng.next();
    for (int i = 0; i < n; ++i) pt[static_cast<size_t>(dev.y[static_cast<size_t>(i)])] = rng.symmetric();
    pt[static_cast<size_t>(dev.lambda)] = l;
    for (int i = 0; i < n; ++i)
      x[i] = xr[i] + pt[static_cast<size_t>(dev.y[static_cast<size_t>(i)])] * l;
    double gv = g.evaluate_dense(pt);
    double fv = eval_constraint(c, robot, x);
    worst = std::max(worst, gv - fv);
  }
  return worst;
}

double check_lower_bound(const HalfPlaneConstraint& c, const RobotModel& robot,
                         const Eigen::VectorXd& xr, double lambda, int N,
                         std::uint64_t seed) {
  VariableSet vars;
  DeviationVars dev = add_deviation_vars(vars, robot.dof());
  Polynomial g = lower_bound_poly(c, robot, xr, dev);
  return check_lower_bound(g, dev, c, robot, xr, lambda, N, seed);
}

double combine_constraints(const std::vector<double>& lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("combine_constraints: empty list");
  double m = lambdas[0];
  for (double l : lambdas) {
    if (l < 0.0) throw std::invalid_argument("combine_constraints: negative bound");
    m = std::min(m, l);
  }
  return m;
}

void write_samples_csv(std::ostream& os, const std::vector<SampleRow>& rows) {
  if (rows.empty()) {
    os << "sample_id,f_min_over_constraints\n";
    return;
  }
  os << "sample_id";
  for (int i = 1; i <= rows[0].x.size(); ++i) os << ",x_" << i;
  os << ",f_min_over_constraints\n";
  char buf[32];
  for (const SampleRow& r : rows) {
    os << r.id;
    for (int i = 0; i < r.x.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.x[i]);
      os << ',' << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", r.f_min);
    os << ',' << buf << '\n';
  }
}

}  // namespace jte
