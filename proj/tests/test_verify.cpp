#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "jte/verify.hpp"

using namespace jte;

namespace {

RobotModel planar_robot() {
  RobotModel r;
  r.kind = RobotModel::Kind::planar_world_angles;
  r.link_lengths = {1.0, 1.0};
  return r;
}

Eigen::VectorXd reference() {
  Eigen::VectorXd xr(2);
  xr << M_PI / 3, M_PI / 6;
  return xr;
}

HalfPlaneConstraint xwall() { return {{1, 0, 0}, 1.456, "x_wall"}; }
HalfPlaneConstraint ywall() { return {{0, 1, 0}, 1.416, "y_wall"}; }
HalfPlaneConstraint general() { return {{1, 1, 0}, 2.8, "diag_wall"}; }

// Direct trig evaluation, independent of the kinematics module.
double xwall_f(double x1, double x2) { return 1.456 - std::cos(x1) - std::cos(x2); }

}  // namespace

TEST_CASE("zero tolerance samples collapse onto the reference") {
  RobotModel r = planar_robot();
  Eigen::VectorXd xr = reference();
  SampleReport rep = sample_check({xwall()}, r, xr, 0.0, 200, 17);
  CHECK(rep.samples == 200);
  CHECK(rep.violations == 0);
  CHECK(rep.min_f == doctest::Approx(0.0899745962155614).epsilon(1e-12));
  REQUIRE(rep.argmin.size() == 2);
  CHECK(rep.argmin[0] == xr[0]);
  CHECK(rep.argmin[1] == xr[1]);
}

TEST_CASE("certified-scale tolerance shows no violations at ten thousand samples") {
  RobotModel r = planar_robot();
  SampleReport rep = sample_check({xwall()}, r, reference(), 0.067, 10000, 1);
  CHECK(rep.violations == 0);
  CHECK(rep.min_f > 0.0);
  // The reported minimum must be re-evaluable from its configuration.
  CHECK(eval_constraint(xwall(), r, rep.argmin) == doctest::Approx(rep.min_f).epsilon(1e-12));
}

TEST_CASE("corner-biased sampling exposes violations beyond the true tolerance") {
  RobotModel r = planar_robot();
  // f at the (-1,-1) corner of lambda = 0.10 is negative by direct evaluation.
  CHECK(xwall_f(M_PI / 3 - 0.10, M_PI / 6 - 0.10) < 0.0);
  SampleReport rep = sample_check({xwall()}, r, reference(), 0.10, 10000, 7, true);
  CHECK(rep.violations > 0);
  CHECK(rep.min_f < 0.0);
}

TEST_CASE("sample reports reproduce bit for bit under the same seed") {
  RobotModel r = planar_robot();
  SampleReport a = sample_check({xwall(), ywall()}, r, reference(), 0.03, 5000, 99);
  SampleReport b = sample_check({xwall(), ywall()}, r, reference(), 0.03, 5000, 99);
  CHECK(a.violations == b.violations);
  CHECK(a.min_f == b.min_f);
  CHECK(a.argmin == b.argmin);

  SampleReport c = sample_check({xwall(), ywall()}, r, reference(), 0.03, 5000, 100);
  CHECK(c.min_f != a.min_f);  // different draw, a tie is astronomically unlikely
}

TEST_CASE("sampling preconditions are enforced") {
  RobotModel r = planar_robot();
  CHECK_THROWS_AS(sample_check({xwall()}, r, reference(), -0.1, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_check({xwall()}, r, reference(), 0.1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(sample_check({}, r, reference(), 0.1, 10, 0), std::invalid_argument);
}

TEST_CASE("the two-point grid hits exactly the hypercube corners") {
  RobotModel r = planar_robot();
  Eigen::VectorXd xr = reference();
  double lambda = 0.1;
  double expect = std::numeric_limits<double>::infinity();
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1})
      expect = std::min(expect, xwall_f(xr[0] + s1 * lambda, xr[1] + s2 * lambda));
  CHECK(grid_min_f(xwall(), r, xr, lambda, 2) == doctest::Approx(expect).epsilon(1e-14));
  CHECK_THROWS_AS(grid_min_f(xwall(), r, xr, lambda, 1), std::invalid_argument);
}

TEST_CASE("grid minimum is nonincreasing in the tolerance on shipped instances") {
  RobotModel r = planar_robot();
  Eigen::VectorXd xr = reference();
  for (const HalfPlaneConstraint& c : {xwall(), ywall(), general()}) {
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 24; ++k) {
      double lambda = 0.005 * k;
      double m = grid_min_f(c, r, xr, lambda, 9);
      CHECK(m <= prev + 1e-12);
      prev = m;
    }
  }
}

TEST_CASE("oracle bisection brackets the true tolerance of the x wall") {
  RobotModel r = planar_robot();
  OracleEstimate est = oracle_lambda(xwall(), r, reference(), 33, 1e-4);
  CHECK(est.lambda_hi - est.lambda_lo <= 1e-4);
  CHECK(est.lambda_lo <= est.lambda_hat);
  CHECK(est.lambda_hat <= est.lambda_hi);
  CHECK(est.lambda_hat >= 0.066);
  CHECK(est.lambda_hat <= 0.069);
  // The binding point is the (-1,-1) corner, which the grid contains, so the
  // bracket holds the corner root near 0.06825.
  CHECK(est.lambda_lo <= 0.0683);
  CHECK(est.lambda_hi >= 0.0681);
}

TEST_CASE("oracle bisection on the diagonal wall sits above the published bound") {
  RobotModel r = planar_robot();
  OracleEstimate est = oracle_lambda(general(), r, reference(), 33, 1e-4);
  CHECK(est.lambda_hat >= 0.118);
  CHECK(est.lambda_hat <= 0.121);
  CHECK(est.lambda_lo > 0.1145);  // published certificate stays below the truth
}

TEST_CASE("an inactive constraint caps the oracle at the search limit") {
  RobotModel r = planar_robot();
  HalfPlaneConstraint far{{1, 0, 0}, 12.0, "far_wall"};  // reach is 2, f >= 10
  OracleEstimate est = oracle_lambda(far, r, reference(), 9, 1e-4, 0.2);
  CHECK(est.lambda_hat == 0.2);
  CHECK(est.lambda_lo == 0.2);
  CHECK(est.lambda_hi == 0.2);
}

TEST_CASE("oracle refuses an unsafe reference") {
  RobotModel r = planar_robot();
  double reach = std::cos(M_PI / 3) + std::cos(M_PI / 6);
  HalfPlaneConstraint through{{1, 0, 0}, reach, "zero_clearance"};
  CHECK_THROWS_AS(oracle_lambda(through, r, reference(), 9, 1e-4), std::domain_error);
}

TEST_CASE("the bound audit is exact at zero tolerance and tiny nearby") {
  RobotModel r = planar_robot();
  CHECK(check_lower_bound(xwall(), r, reference(), 0.0, 500, 3) == 0.0);
  // At lambda = 1e-3 the gap between bound and truth is cubic-order small.
  double m = check_lower_bound(xwall(), r, reference(), 1e-3, 2000, 3);
  CHECK(std::fabs(m) <= 1e-9);
}

TEST_CASE("the bound audit stays small at working tolerances and is deterministic") {
  RobotModel r = planar_robot();
  double a = check_lower_bound(xwall(), r, reference(), 0.067, 10000, 11);
  double b = check_lower_bound(xwall(), r, reference(), 0.067, 10000, 11);
  CHECK(a == b);
  CHECK(std::fabs(a) <= 1e-4);  // any excess over f is at most cubic-order
  CHECK_THROWS_AS(check_lower_bound(xwall(), r, reference(), 0.3, 10, 0),
                  std::invalid_argument);
}

TEST_CASE("a corrupted bound polynomial is flagged by the audit") {
  RobotModel r = planar_robot();
  Eigen::VectorXd xr = reference();
  // Keep-out wall x >= 1.2: the cosines enter f positively, so the quadratic
  // bound coefficients are negative and a sign flip makes the bound
  // optimistic instead of conservative.
  HalfPlaneConstraint keep_out{{-1, 0, 0}, -1.2, "min_x"};
  VariableSet vars;
  DeviationVars dev = add_deviation_vars(vars, 2);
  Polynomial g = lower_bound_poly(keep_out, r, xr, dev);

  Monomial quad = Monomial::var(dev.y[0], 2).times(Monomial::var(dev.lambda, 2));
  double coeff = g.coefficient(quad);
  REQUIRE(coeff < 0.0);
  Polynomial bad = g;
  bad.add_term(quad, -2.0 * coeff);  // flips the coefficient sign

  double clean = check_lower_bound(g, dev, keep_out, r, xr, 0.067, 10000, 5);
  double flagged = check_lower_bound(bad, dev, keep_out, r, xr, 0.067, 10000, 5);
  CHECK(std::fabs(clean) <= 1e-4);
  CHECK(flagged > 1e-4);
}

TEST_CASE("the combiner returns the worst single-constraint bound") {
  CHECK(combine_constraints({0.0346, 0.0265, 0.035, 0.0302}) == doctest::Approx(0.0265));
  CHECK(combine_constraints({0.5}) == doctest::Approx(0.5));
  CHECK(combine_constraints({0.1, 0.1, 0.1}) == doctest::Approx(0.1));
  CHECK_THROWS_AS(combine_constraints({}), std::invalid_argument);
  CHECK_THROWS_AS(combine_constraints({0.1, -0.2}), std::invalid_argument);
}

TEST_CASE("sample rows round-trip through the CSV emitter") {
  RobotModel r = planar_robot();
  std::vector<SampleRow> rows;
  sample_check({xwall(), ywall()}, r, reference(), 0.05, 5, 21, false, &rows);
  REQUIRE(rows.size() == 5);

  std::ostringstream os;
  write_samples_csv(os, rows);
  std::istringstream is(os.str());
  std::string line;
  REQUIRE(std::getline(is, line));
  CHECK(line == "sample_id,x_1,x_2,f_min_over_constraints");
  int id = 0;
  while (std::getline(is, line)) {
    std::istringstream fields(line);
    std::string cell;
    std::getline(fields, cell, ',');
    CHECK(std::stoi(cell) == id);
    Eigen::VectorXd x(2);
    std::getline(fields, cell, ',');
    x[0] = std::stod(cell);
    std::getline(fields, cell, ',');
    x[1] = std::stod(cell);
    std::getline(fields, cell, ',');
    double f = std::stod(cell);
    // Full-precision columns re-evaluate to the recorded minimum.
    double f1 = eval_constraint(xwall(), r, x);
    double f2 = eval_constraint(ywall(), r, x);
    CHECK(std::min(f1, f2) == doctest::Approx(f).epsilon(1e-12));
    CHECK(x == rows[static_cast<size_t>(id)].x);
    ++id;
  }
  CHECK(id == 5);
}
