#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "jte/nlp.hpp"

using namespace jte;

namespace {

struct PlanarSetup {
  RobotModel robot;
  HalfPlaneConstraint wall;
  Eigen::VectorXd xr;
  VariableSet vars;
  DeviationVars dev;
  std::vector<ConeTerm> cone;
  CompiledGram gram;
};

PlanarSetup planar_xwall(double offset = 1.456) {
  PlanarSetup s;
  s.robot.kind = RobotModel::Kind::planar_world_angles;
  s.robot.link_lengths = {1.0, 1.0};
  s.wall.normal = {1, 0, 0};
  s.wall.offset = offset;
  s.xr.resize(2);
  s.xr << M_PI / 3, M_PI / 6;
  s.dev = add_deviation_vars(s.vars, 2);
  Polynomial g = lower_bound_poly(s.wall, s.robot, s.xr, s.dev);
  RefuteGenerators gens = build_refute_generators(g, s.dev);
  s.cone = enumerate_cone_terms(gens, 2, s.vars);
  Polynomial p0 = assemble_p0(s.cone);
  GramProblem gp = build_gram(p0, s.dev.y);
  s.gram = compile_gram(gp, s.cone, s.dev.lambda);
  return s;
}

// Constant symmetric matrix as a CompiledGram; pass the upper triangle only.
CompiledGram constant_gram(const Eigen::MatrixXd& M) {
  CompiledGram g;
  g.dim = static_cast<int>(M.rows());
  g.nalpha = 0;
  for (int i = 0; i < g.dim; ++i)
    for (int j = i; j < g.dim; ++j)
      if (M(i, j) != 0.0) g.terms.push_back({i, j, -1, 0, M(i, j)});
  return g;
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, int n, double shift) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = u(rng);
  Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  S.diagonal().array() += shift;
  return S;
}

double det_cofactor(const Eigen::MatrixXd& A) {
  int n = static_cast<int>(A.rows());
  if (n == 1) return A(0, 0);
  double det = 0.0, sign = 1.0;
  for (int j = 0; j < n; ++j) {
    Eigen::MatrixXd sub(n - 1, n - 1);
    for (int r = 1; r < n; ++r) {
      int cc = 0;
      for (int c = 0; c < n; ++c) {
        if (c == j) continue;
        sub(r - 1, cc++) = A(r, c);
      }
    }
    det += sign * A(0, j) * det_cofactor(sub);
    sign = -sign;
  }
  return det;
}

}  // namespace

TEST_CASE("leading minors match hand values and zero out after a zero pivot") {
  Eigen::MatrixXd I3 = Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd m = leading_minors(I3);
  CHECK(m.size() == 3);
  for (int k = 0; k < 3; ++k) CHECK(m[k] == doctest::Approx(1.0));

  Eigen::MatrixXd A(2, 2);
  A << 4, 2, 2, 3;
  m = leading_minors(A);
  CHECK(m[0] == doctest::Approx(4.0));
  CHECK(m[1] == doctest::Approx(8.0));

  // The multiplier box generator at alpha = -1: diag(0, -1).
  Eigen::MatrixXd Z(2, 2);
  Z << 0, 0, 0, -1;
  m = leading_minors(Z);
  CHECK(m[0] == 0.0);
  CHECK(m[1] == 0.0);
}

TEST_CASE("leading minors agree with cofactor expansion up to 6x6") {
  std::mt19937_64 rng(91);
  for (int iter = 0; iter < 50; ++iter) {
    int n = 1 + static_cast<int>(rng() % 6);
    double shift = (iter % 2 == 0) ? 4.0 : -4.0;  // both definite orientations
    Eigen::MatrixXd S = random_symmetric(rng, n, shift);
    Eigen::VectorXd m = leading_minors(S);
    for (int k = 1; k <= n; ++k) {
      double ref = det_cofactor(S.topLeftCorner(k, k));
      CHECK(std::fabs(m[k - 1] - ref) <= 1e-9 * std::max(1.0, std::fabs(ref)));
    }
  }
}

TEST_CASE("leading minors saturate instead of overflowing") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(3, 3);
  D(0, 0) = 1e200;
  D(1, 1) = 1e160;
  D(2, 2) = 1e-100;
  Eigen::VectorXd m = leading_minors(D);
  CHECK(m[0] == doctest::Approx(1e200).epsilon(1e-9));
  CHECK(m[1] == 1e300);  // true value 1e360 overflows, clamps to the cap
  CHECK(m[2] == doctest::Approx(1e260).epsilon(1e-9));

  D(1, 1) = -1e160;
  m = leading_minors(D);
  CHECK(m[1] == -1e300);
}

TEST_CASE("log-space minor test agrees with the dense minors at huge scales") {
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(3, 3);
  big(0, 0) = 1e150;
  big(1, 1) = 1e150;
  big(2, 2) = 1e150;
  CHECK(minors_nonnegative(constant_gram(big), 1.0, Eigen::VectorXd(0), 1e-8));

  big(2, 2) = -1e150;  // det3 = -1e450, far below any tolerance
  CHECK_FALSE(minors_nonnegative(constant_gram(big), 1.0, Eigen::VectorXd(0), 1e-8));

  Eigen::MatrixXd tiny(2, 2);
  tiny << 1, 0, 0, -1e-9;
  CHECK(minors_nonnegative(constant_gram(tiny), 1.0, Eigen::VectorXd(0), 1e-8));
  tiny(1, 1) = -1e-7;
  CHECK_FALSE(minors_nonnegative(constant_gram(tiny), 1.0, Eigen::VectorXd(0), 1e-8));

  // A zero pivot ends the recursion with zero minors, which pass.
  Eigen::MatrixXd zp(2, 2);
  zp << 0, 0, 0, -1;
  CHECK(minors_nonnegative(constant_gram(zp), 1.0, Eigen::VectorXd(0), 1e-8));
}

TEST_CASE("compiled gram reproduces the polynomial quadratic form") {
  PlanarSetup s = planar_xwall();
  const CompiledGram& cg = s.gram;
  CHECK(cg.dim == 6);
  CHECK(cg.nalpha == 6);
  CHECK(cg.bound_alpha == 0);
  std::vector<int> sizes = {1, 1, 1, 2, 2, 2};
  CHECK(cg.subset_size == sizes);

  // Rebuild the scalar quadratic form Y^T Q Y and compare with p0 directly.
  Polynomial p0 = assemble_p0(s.cone);
  GramProblem gp = build_gram(p0, s.dev.y);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int iter = 0; iter < 20; ++iter) {
    double lambda = u(rng);
    Eigen::VectorXd alpha(cg.nalpha);
    for (int a = 0; a < cg.nalpha; ++a) alpha[a] = u(rng);
    std::map<VarId, double> pt;
    for (size_t i = 0; i < s.dev.y.size(); ++i) pt[s.dev.y[i]] = u(rng) - 0.5;
    pt[s.dev.lambda] = lambda;
    for (size_t t = 0; t < s.cone.size(); ++t) pt[s.cone[t].alpha] = alpha[static_cast<int>(t)];

    Eigen::MatrixXd Q = cg.assemble(lambda, alpha);
    Eigen::VectorXd Y(cg.dim);
    for (int i = 0; i < cg.dim; ++i)
      Y[i] = Polynomial::term(gp.basis[static_cast<size_t>(i)], 1.0).evaluate(pt);
    double quad = Y.dot(Q * Y);
    double direct = p0.evaluate(pt);
    CHECK(std::fabs(quad - direct) <= 1e-9 * (1.0 + std::fabs(direct)));
  }
}

TEST_CASE("compile rejects entries that are not affine in the multipliers") {
  VariableSet vars;
  DeviationVars dev = add_deviation_vars(vars, 1);
  VarId alpha = vars.add("alpha_0", VarKind::multiplier);
  ConeTerm t;
  t.subset = {0};
  t.alpha = alpha;
  t.product = Polynomial(1.0);

  GramProblem gp;
  gp.basis = {Monomial::one()};
  gp.half_degree = 0;
  gp.entries[{0, 0}] = Polynomial::term(Monomial::var(alpha, 2), 1.0);
  CHECK_THROWS_AS(compile_gram(gp, {t}, dev.lambda), std::logic_error);

  gp.entries[{0, 0}] = Polynomial::variable(dev.y[0]);
  CHECK_THROWS_AS(compile_gram(gp, {t}, dev.lambda), std::logic_error);
}

TEST_CASE("assembled derivative matches finite differences of the assembly") {
  PlanarSetup s = planar_xwall();
  const CompiledGram& cg = s.gram;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int iter = 0; iter < 10; ++iter) {
    double lambda = u(rng) * 0.1;
    Eigen::VectorXd alpha(cg.nalpha);
    for (int a = 0; a < cg.nalpha; ++a) alpha[a] = u(rng);
    for (int coord = 0; coord <= cg.nalpha; ++coord) {
      Eigen::MatrixXd D = cg.assemble_derivative(lambda, alpha, coord);
      double h = 1e-6;
      Eigen::MatrixXd Qp, Qm;
      if (coord == 0) {
        Qp = cg.assemble(lambda + h, alpha);
        Qm = cg.assemble(lambda - h, alpha);
      } else {
        Eigen::VectorXd ap = alpha, am = alpha;
        ap[coord - 1] += h;
        am[coord - 1] -= h;
        Qp = cg.assemble(lambda, ap);
        Qm = cg.assemble(lambda, am);
      }
      Eigen::MatrixXd fd = (Qp - Qm) / (2.0 * h);
      CHECK((D - fd).cwiseAbs().maxCoeff() <= 1e-7 * (1.0 + D.cwiseAbs().maxCoeff()));
    }
  }
}

TEST_CASE("minor directional derivatives obey the trace identity") {
  // Dense synthetic instance kept diagonally dominant so every leading block
  // stays invertible: d/dt det_k = det_k * tr(Q_k^{-1} D_k).
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  CompiledGram g;
  g.dim = 4;
  g.nalpha = 2;
  g.subset_size = {1, 1};
  g.bound_alpha = 0;
  for (int i = 0; i < g.dim; ++i) {
    g.terms.push_back({i, i, -1, 0, 6.0});
    for (int j = i; j < g.dim; ++j)
      for (int a = -1; a < g.nalpha; ++a)
        for (int p = 0; p <= 2; ++p) g.terms.push_back({i, j, a, p, u(rng)});
  }

  std::uniform_real_distribution<double> pos(0.2, 1.0);
  for (int iter = 0; iter < 20; ++iter) {
    double lambda = pos(rng) * 0.5;
    Eigen::VectorXd alpha(2);
    alpha << pos(rng), pos(rng);
    double dl = u(rng);
    Eigen::VectorXd da(2);
    da << u(rng), u(rng);

    Eigen::MatrixXd Q = g.assemble(lambda, alpha);
    Eigen::MatrixXd D = dl * g.assemble_derivative(lambda, alpha, 0) +
                        da[0] * g.assemble_derivative(lambda, alpha, 1) +
                        da[1] * g.assemble_derivative(lambda, alpha, 2);
    Eigen::VectorXd base = leading_minors(Q);

    double h = 1e-5;
    Eigen::VectorXd mp = eval_minors(g, lambda + h * dl, alpha + h * da);
    Eigen::VectorXd mm = eval_minors(g, lambda - h * dl, alpha - h * da);
    for (int k = 1; k <= g.dim; ++k) {
      Eigen::MatrixXd Qk = Q.topLeftCorner(k, k);
      Eigen::MatrixXd Dk = D.topLeftCorner(k, k);
      double jacobi = base[k - 1] * (Qk.inverse() * Dk).trace();
      double fd = (mp[k - 1] - mm[k - 1]) / (2.0 * h);
      CHECK(std::fabs(jacobi - fd) <= 1e-5 * std::max(1.0, std::fabs(jacobi)));
    }
  }
}

TEST_CASE("sturm bisection eigenvalue agrees with a dense eigensolver") {
  std::mt19937_64 rng(53);
  for (int iter = 0; iter < 40; ++iter) {
    int n = 1 + static_cast<int>(rng() % 30);
    Eigen::MatrixXd S = random_symmetric(rng, n, 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    double ref = es.eigenvalues()(0);
    double got = min_symmetric_eigenvalue(S);
    CHECK(std::fabs(got - ref) <= 1e-10 * std::max(1.0, std::fabs(ref)));
  }
}

TEST_CASE("face analysis clamps the pair multipliers on the planar wall") {
  PlanarSetup s = planar_xwall();
  FaceAnalysis fa = analyze_certificate_face(s.gram);
  REQUIRE(fa.clamped.size() == 6);
  // Singles alpha_0, alpha_1, alpha_2 stay free; pairs alpha_01, alpha_02,
  // alpha_12 sit on sign-forced zero diagonals.
  for (int a = 0; a < 3; ++a) CHECK_FALSE(static_cast<bool>(fa.clamped[static_cast<size_t>(a)]));
  for (int a = 3; a < 6; ++a) CHECK(static_cast<bool>(fa.clamped[static_cast<size_t>(a)]));
  CHECK_FALSE(fa.impossible);
  REQUIRE(fa.alive.size() == 3);
  CHECK(fa.alive == std::vector<int>{0, 1, 2});
  CHECK(fa.active_rows == 3);
}

TEST_CASE("face analysis flags a bound-forced negative diagonal as impossible") {
  // Row 1 diagonal is -0.5 lambda^2 alpha_0 - alpha_1. The bound multiplier
  // alpha_0 cannot be clamped (the constant row forces it positive), so the
  // diagonal is strictly negative at every lambda > 0 and no PSD completion
  // exists.
  CompiledGram g;
  g.dim = 2;
  g.nalpha = 2;
  g.subset_size = {1, 1};
  g.bound_alpha = 0;
  g.terms.push_back({0, 0, -1, 0, 1.0});
  g.terms.push_back({0, 0, 1, 0, -1.0});
  g.terms.push_back({1, 1, 0, 2, -0.5});
  g.terms.push_back({1, 1, 1, 0, -1.0});
  FaceAnalysis fa = analyze_certificate_face(g);
  CHECK(fa.impossible);
  CHECK(fa.blocked_row == 1);
  CHECK(fa.alive.empty());

  // Pointing the bound elsewhere makes both multipliers clampable and the
  // structure feasible with row 1 identically zero.
  g.bound_alpha = -1;
  fa = analyze_certificate_face(g);
  CHECK_FALSE(fa.impossible);
  CHECK(static_cast<bool>(fa.clamped[0]));
  CHECK(static_cast<bool>(fa.clamped[1]));
  REQUIRE(fa.alive.size() == 1);
  CHECK(fa.alive[0] == 0);
  CHECK(fa.active_rows == 1);
}

TEST_CASE("face analysis clamps multipliers that load a zero-diagonal row") {
  // Row 2 has no diagonal at all; alpha_1 writes into (1,2), so it must be
  // zero, which then kills the only positive channel of row 1 and cascades:
  // alpha_2 on row 1's diagonal is clamped as well.
  CompiledGram g;
  g.dim = 3;
  g.nalpha = 3;
  g.subset_size = {1, 1, 1};
  g.bound_alpha = 0;
  g.terms.push_back({0, 0, 0, 0, 2.0});
  g.terms.push_back({1, 1, 1, 0, 1.0});
  g.terms.push_back({1, 1, 2, 2, -1.0});
  g.terms.push_back({1, 2, 1, 1, 0.5});
  FaceAnalysis fa = analyze_certificate_face(g);
  CHECK_FALSE(fa.impossible);
  CHECK(static_cast<bool>(fa.clamped[1]));
  CHECK(static_cast<bool>(fa.clamped[2]));
  CHECK_FALSE(static_cast<bool>(fa.clamped[0]));
  REQUIRE(fa.alive.size() == 1);
  CHECK(fa.alive[0] == 0);

  // The same shape with the bound multiplier doing the loading is a
  // structural dead end.
  CompiledGram h = g;
  h.terms[3].alpha = 0;
  fa = analyze_certificate_face(h);
  CHECK(fa.impossible);
  CHECK(fa.blocked_row == 2);
}

TEST_CASE("barrier solve certifies the planar wall inside the expected window") {
  PlanarSetup s = planar_xwall();
  SolverOptions opts;
  NlpSolution sol = solve_nlp(s.gram, opts);
  REQUIRE(sol.status == SolveStatus::converged);
  CHECK(sol.lambda >= 0.060);
  CHECK(sol.lambda <= 0.0682);
  CHECK(sol.alpha.size() == 6);
  for (int a = 0; a < 3; ++a) CHECK(sol.alpha[a] > 0.0);
  for (int a = 3; a < 6; ++a) CHECK(sol.alpha[a] == 0.0);
  CHECK_FALSE(sol.objective_trace.empty());
  CHECK(sol.objective_trace.back() == doctest::Approx(sol.lambda).epsilon(1e-9));

  NlpSolution cert = certify_with_backoff(s.gram, sol, opts);
  CHECK(cert.certified);
  CHECK(cert.backoff_count == 0);
  CHECK(cert.lambda == sol.lambda);
  CHECK(cert.min_eigenvalue >= -opts.psd_tol);

  // The certified point satisfies the minor system and the full PSD check.
  CHECK(minors_nonnegative(s.gram, cert.lambda, cert.alpha, opts.feas_tol));
}

TEST_CASE("solver output is deterministic across repeated runs") {
  SolverOptions opts;
  PlanarSetup a = planar_xwall();
  PlanarSetup b = planar_xwall();
  NlpSolution s1 = solve_nlp(a.gram, opts);
  NlpSolution s2 = solve_nlp(b.gram, opts);
  CHECK(s1.lambda == s2.lambda);
  CHECK(s1.iterations == s2.iterations);
  REQUIRE(s1.objective_trace.size() == s2.objective_trace.size());
  for (size_t i = 0; i < s1.objective_trace.size(); ++i)
    CHECK(s1.objective_trace[i] == s2.objective_trace[i]);
}

TEST_CASE("a constraint through the reference point is reported infeasible") {
  // Wall offset equal to the reference x coordinate: zero clearance.
  PlanarSetup s = planar_xwall(std::cos(M_PI / 3) + std::cos(M_PI / 6));
  SolverOptions opts;
  NlpSolution sol = solve_nlp(s.gram, opts);
  CHECK(sol.status == SolveStatus::infeasible);
  CHECK(sol.lambda == 0.0);
  NlpSolution cert = certify_with_backoff(s.gram, sol, opts);
  CHECK_FALSE(cert.certified);
  CHECK(cert.status == SolveStatus::infeasible);
}

TEST_CASE("minors can pass while the eigenvalue check rejects") {
  Eigen::MatrixXd Z(2, 2);
  Z << 0, 0, 0, -1;
  CompiledGram g = constant_gram(Z);
  Eigen::VectorXd none(0);
  CHECK(minors_nonnegative(g, 0.5, none, 1e-8));

  NlpSolution sol;
  sol.lambda = 0.5;
  sol.alpha = none;
  sol.status = SolveStatus::converged;
  PsdCheck pc = post_check_psd(g, sol, 1e-8);
  CHECK_FALSE(pc.certified);
  CHECK(pc.min_eigenvalue == doctest::Approx(-1.0).epsilon(1e-9));

  // Backoff can never turn this into a certificate and must not emit one.
  SolverOptions opts;
  opts.backoff_rounds = 4;
  NlpSolution out = certify_with_backoff(g, sol, opts);
  CHECK_FALSE(out.certified);
  CHECK(out.status == SolveStatus::infeasible);
  CHECK(out.lambda == 0.0);
  CHECK(out.backoff_count == 4);
}

TEST_CASE("backoff shrinks a rejected bound until the eigenvalue check passes") {
  // Q(lambda) = diag(1, 0.097 - lambda): the solve would cap at 0.097, and a
  // start at 0.1 needs exactly one 0.95 shrink to clear the check.
  CompiledGram g;
  g.dim = 2;
  g.nalpha = 0;
  g.terms.push_back({0, 0, -1, 0, 1.0});
  g.terms.push_back({1, 1, -1, 0, 0.097});
  g.terms.push_back({1, 1, -1, 1, -1.0});

  NlpSolution sol;
  sol.lambda = 0.1;
  sol.alpha = Eigen::VectorXd(0);
  sol.status = SolveStatus::converged;
  SolverOptions opts;
  NlpSolution out = certify_with_backoff(g, sol, opts);
  CHECK(out.certified);
  CHECK(out.backoff_count == 1);
  CHECK(out.lambda == doctest::Approx(0.095).epsilon(1e-12));
  CHECK(out.min_eigenvalue == doctest::Approx(0.002).epsilon(1e-9));

  // The plain solve drives lambda to the cap from below.
  NlpSolution direct = solve_nlp(g, opts);
  CHECK(direct.status == SolveStatus::converged);
  CHECK(direct.lambda > 0.0968);
  CHECK(direct.lambda < 0.097);
}
