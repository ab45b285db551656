#include "jte/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace jte {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd CompiledGram::assemble(double lambda, const Eigen::VectorXd& alpha) const {
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(dim, dim);
  int maxp = 0;
  for (const Term& t : terms) maxp = std::max(maxp, t.lpow);
  std::vector<double> lp(static_cast<size_t>(maxp) + 1, 1.0);
  for (int k = 1; k <= maxp; ++k) lp[static_cast<size_t>(k)] = lp[static_cast<size_t>(k - 1)] * lambda;
  for (const Term& t : terms) {
    double v = t.coeff * lp[static_cast<size_t>(t.lpow)];
    if (t.alpha >= 0) v *= alpha[t.alpha];
    Q(t.row, t.col) += v;
    if (t.row != t.col) Q(t.col, t.row) += v;
  }
  return Q;
}

Eigen::MatrixXd CompiledGram::assemble_derivative(double lambda, const Eigen::VectorXd& alpha,
                                                  int coord) const {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(dim, dim);
  for (const Term& t : terms) {
    double v = 0.0;
    if (coord == 0) {
      if (t.lpow == 0) continue;
      v = t.coeff * t.lpow * std::pow(lambda, t.lpow - 1);
      if (t.alpha >= 0) v *= alpha[t.alpha];
    } else {
      if (t.alpha != coord - 1) continue;
      v = t.coeff * std::pow(lambda, t.lpow);
    }
    D(t.row, t.col) += v;
    if (t.row != t.col) D(t.col, t.row) += v;
  }
  return D;
}

CompiledGram compile_gram(const GramProblem& gp, const std::vector<ConeTerm>& cone,
                          VarId lambda_id) {
  CompiledGram cg;
  cg.dim = gp.size();
  cg.nalpha = static_cast<int>(cone.size());
  std::map<VarId, int> aidx;
  for (int a = 0; a < cg.nalpha; ++a) {
    aidx[cone[static_cast<size_t>(a)].alpha] = a;
    cg.subset_size.push_back(static_cast<int>(cone[static_cast<size_t>(a)].subset.size()));
    if (cone[static_cast<size_t>(a)].subset == std::vector<int>{0}) cg.bound_alpha = a;
  }
  for (const auto& [key, poly] : gp.entries) {
    for (const auto& [m, coeff] : poly.terms()) {
      CompiledGram::Term t;
      t.row = key.first;
      t.col = key.second;
      t.alpha = -1;
      t.lpow = 0;
      t.coeff = coeff;
      for (const auto& [v, e] : m.factors()) {
        if (v == lambda_id) {
          t.lpow = e;
        } else if (auto it = aidx.find(v); it != aidx.end()) {
          if (e != 1 || t.alpha != -1)
            throw std::logic_error("gram entry is not affine in the multipliers");
          t.alpha = it->second;
        } else {
          throw std::logic_error("gram entry contains an unexpected variable");
        }
      }
      cg.terms.push_back(t);
    }
  }
  return cg;
}

Eigen::VectorXd leading_minors(const Eigen::MatrixXd& Qin) {
  Eigen::MatrixXd Q = Qin;
  int n = static_cast<int>(Q.rows());
  Eigen::VectorXd minors(n);
  double logmag = 0.0;
  double sign = 1.0;
  for (int k = 0; k < n; ++k) {
    double d = Q(k, k);
    if (d == 0.0) {
      minors.segment(k, n - k).setZero();
      return minors;
    }
    logmag += std::log(std::fabs(d));
    if (d < 0.0) sign = -sign;
    minors[k] = logmag > 690.0 ? sign * 1e300 : sign * std::exp(logmag);
    for (int r = k + 1; r < n; ++r) {
      double f = Q(r, k) / d;
      if (f != 0.0) Q.row(r).segment(k + 1, n - k - 1) -= f * Q.row(k).segment(k + 1, n - k - 1);
    }
  }
  return minors;
}

Eigen::VectorXd eval_minors(const CompiledGram& g, double lambda,
                            const Eigen::VectorXd& alpha) {
  return leading_minors(g.assemble(lambda, alpha));
}

bool minors_nonnegative(const CompiledGram& g, double lambda, const Eigen::VectorXd& alpha,
                        double tol) {
  Eigen::MatrixXd Q = g.assemble(lambda, alpha);
  int n = static_cast<int>(Q.rows());
  double logmag = 0.0;
  double sign = 1.0;
  double logtol = std::log(tol);
  for (int k = 0; k < n; ++k) {
    double d = Q(k, k);
    if (d == 0.0) return true;  // this and all later minors are exactly 0
    logmag += std::log(std::fabs(d));
    if (d < 0.0) sign = -sign;
    if (sign < 0.0 && logmag > logtol) return false;
    for (int r = k + 1; r < n; ++r) {
      double f = Q(r, k) / d;
      if (f != 0.0) Q.row(r).segment(k + 1, n - k - 1) -= f * Q.row(k).segment(k + 1, n - k - 1);
    }
  }
  return true;
}

FaceAnalysis analyze_certificate_face(const CompiledGram& g) {
  FaceAnalysis fa;
  fa.clamped.assign(static_cast<size_t>(g.nalpha), 0);
  std::vector<std::vector<const CompiledGram::Term*>> diag(static_cast<size_t>(g.dim));
  std::vector<std::vector<const CompiledGram::Term*>> off(static_cast<size_t>(g.dim));
  for (const auto& t : g.terms) {
    if (t.row == t.col) {
      diag[static_cast<size_t>(t.row)].push_back(&t);
    } else {
      off[static_cast<size_t>(t.row)].push_back(&t);
      off[static_cast<size_t>(t.col)].push_back(&t);
    }
  }
  auto unclampable = [&](const CompiledGram::Term* t) {
    return t->alpha < 0 || t->alpha == g.bound_alpha;
  };

  bool changed = true;
  while (changed && !fa.impossible) {
    changed = false;
    for (int r = 0; r < g.dim && !fa.impossible; ++r) {
      int live = 0;
      bool positive = false, forced_negative = false;
      for (const auto* t : diag[static_cast<size_t>(r)]) {
        if (t->alpha >= 0 && fa.clamped[static_cast<size_t>(t->alpha)]) continue;
        ++live;
        if (t->coeff > 0)
          positive = true;
        else if (unclampable(t))
          forced_negative = true;
      }
      if (positive) continue;
      if (live > 0) {
        if (forced_negative) {
          // Strictly negative diagonal at every lambda > 0: no PSD completion.
          fa.impossible = true;
          fa.blocked_row = r;
          break;
        }
        for (const auto* t : diag[static_cast<size_t>(r)]) {
          if (t->alpha >= 0 && !fa.clamped[static_cast<size_t>(t->alpha)]) {
            fa.clamped[static_cast<size_t>(t->alpha)] = 1;
            changed = true;
          }
        }
        continue;
      }
      // Zero diagonal: PSD forces the whole row to zero.
      for (const auto* t : off[static_cast<size_t>(r)]) {
        if (t->alpha >= 0 && fa.clamped[static_cast<size_t>(t->alpha)]) continue;
        if (unclampable(t)) {
          fa.impossible = true;
          fa.blocked_row = r;
          break;
        }
        fa.clamped[static_cast<size_t>(t->alpha)] = 1;
        changed = true;
      }
    }
  }

  if (!fa.impossible) {
    for (int r = 0; r < g.dim; ++r) {
      for (const auto* t : diag[static_cast<size_t>(r)]) {
        if (t->alpha >= 0 && fa.clamped[static_cast<size_t>(t->alpha)]) continue;
        if (t->coeff > 0) {
          fa.alive.push_back(r);
          break;
        }
      }
    }
  }
  int prefix = 0;
  while (prefix < static_cast<int>(fa.alive.size()) && fa.alive[static_cast<size_t>(prefix)] == prefix)
    ++prefix;
  fa.active_rows = prefix;
  return fa;
}

namespace {

// Barrier over the alive principal submatrix plus the bound constraints.
// The dead rows are identically zero once their multipliers are clamped, so
// positive definiteness of the submatrix is the full strictly-feasible set.
// The decision vector is c = [lambda, alpha...]; clamped multipliers stay 0,
// a pinned multiplier keeps its restoration value, and neither is a free
// coordinate. Active terms carry submatrix indices.
struct Barrier {
  const CompiledGram& g;
  int K;
  int pinned;  // multiplier held at the gauge scale, -1 for none
  std::vector<CompiledGram::Term> active;
  std::vector<int> free_coords;
  int max_lpow = 0;
  mutable Eigen::MatrixXd Q;
  mutable std::vector<double> lp;

  Barrier(const CompiledGram& gram, const FaceAnalysis& face, bool lambda_free, int pinned_alpha)
      : g(gram), K(static_cast<int>(face.alive.size())), pinned(pinned_alpha) {
    std::vector<int> pos(static_cast<size_t>(g.dim), -1);
    for (int k = 0; k < K; ++k) pos[static_cast<size_t>(face.alive[static_cast<size_t>(k)])] = k;
    for (const auto& t : g.terms) {
      if (pos[static_cast<size_t>(t.row)] < 0 || pos[static_cast<size_t>(t.col)] < 0) continue;
      if (t.alpha >= 0 && face.clamped[static_cast<size_t>(t.alpha)]) continue;
      CompiledGram::Term s = t;
      s.row = pos[static_cast<size_t>(t.row)];
      s.col = pos[static_cast<size_t>(t.col)];
      active.push_back(s);
      max_lpow = std::max(max_lpow, t.lpow);
    }
    if (lambda_free) free_coords.push_back(0);
    for (int a = 0; a < g.nalpha; ++a)
      if (a != pinned && !face.clamped[static_cast<size_t>(a)]) free_coords.push_back(1 + a);
    Q.resize(K, K);
    lp.assign(static_cast<size_t>(max_lpow) + 1, 1.0);
  }

  double value(const Eigen::VectorXd& c, double mu) const {
    if (!(c[0] > 0.0)) return kInf;
    for (int k = 1; k <= max_lpow; ++k)
      lp[static_cast<size_t>(k)] = lp[static_cast<size_t>(k - 1)] * c[0];
    Q.setZero();
    for (const auto& t : active) {
      double v = t.coeff * lp[static_cast<size_t>(t.lpow)];
      if (t.alpha >= 0) v *= c[1 + t.alpha];
      Q(t.row, t.col) += v;
      if (t.row != t.col) Q(t.col, t.row) += v;
    }
    double minor_logs = 0.0;
    for (int k = 0; k < K; ++k) {
      double d = Q(k, k);
      if (!(d > 0.0)) return kInf;
      minor_logs += (K - k) * std::log(d);
      for (int r = k + 1; r < K; ++r) {
        double f = Q(r, k) / d;
        if (f != 0.0) Q.row(r).segment(k + 1, K - k - 1) -= f * Q.row(k).segment(k + 1, K - k - 1);
      }
    }
    double bound_logs = 0.0;
    for (int i : free_coords) {
      if (!(c[i] > 0.0)) return kInf;
      bound_logs += std::log(c[i]);
    }
    return -c[0] - mu * (minor_logs + bound_logs);
  }

  void gradient(const Eigen::VectorXd& c, double mu, double f0, Eigen::VectorXd& grad) const {
    Eigen::VectorXd work = c;
    for (size_t i = 0; i < free_coords.size(); ++i) {
      int coord = free_coords[i];
      double save = work[coord];
      double h = 1e-6 * (1.0 + std::fabs(save));
      work[coord] = save + h;
      double fp = value(work, mu);
      work[coord] = save - h;
      double fm = value(work, mu);
      work[coord] = save;
      if (std::isfinite(fp) && std::isfinite(fm))
        grad[static_cast<Eigen::Index>(i)] = (fp - fm) / (2.0 * h);
      else if (std::isfinite(fp))
        grad[static_cast<Eigen::Index>(i)] = (fp - f0) / h;
      else if (std::isfinite(fm))
        grad[static_cast<Eigen::Index>(i)] = (f0 - fm) / h;
      else
        grad[static_cast<Eigen::Index>(i)] = 0.0;
    }
  }
};

// Quasi-Newton descent with Armijo backtracking; returns iterations used.
int inner_solve(const Barrier& B, Eigen::VectorXd& c, double mu, int budget, double gtol) {
  int m = static_cast<int>(B.free_coords.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(m, m);
  bool scaled = false;
  double f0 = B.value(c, mu);
  Eigen::VectorXd grad(m), gnew(m), p(m), s(m), y(m);
  B.gradient(c, mu, f0, grad);
  int used = 0;
  while (used < budget && grad.lpNorm<Eigen::Infinity>() > gtol) {
    p = -H * grad;
    double slope = grad.dot(p);
    if (!(slope < 0.0)) {
      H.setIdentity();
      scaled = false;
      p = -grad;
      slope = -grad.squaredNorm();
      if (!(slope < 0.0)) break;
    }
    double t = 1.0;
    double fnew = kInf;
    Eigen::VectorXd cnew = c;
    int bt = 0;
    for (; bt < 60; ++bt) {
      cnew = c;
      for (int i = 0; i < m; ++i) cnew[B.free_coords[static_cast<size_t>(i)]] += t * p[i];
      fnew = B.value(cnew, mu);
      if (fnew <= f0 + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    ++used;
    if (bt == 60) break;  // no acceptable step along this direction
    B.gradient(cnew, mu, fnew, gnew);
    s = t * p;
    y = gnew - grad;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        H = (sy / y.squaredNorm()) * Eigen::MatrixXd::Identity(m, m);
        scaled = true;
      }
      Eigen::VectorXd Hy = H * y;
      double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose());
      H -= (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
    c = cnew;
    f0 = fnew;
    grad = gnew;
  }
  return used;
}

// Deterministic search for a strictly feasible start: the spec seed point,
// then geometric growth of the bound multiplier, then smaller lambda seeds.
bool restore_feasible(const Barrier& B, const CompiledGram& g, const FaceAnalysis& face,
                      const SolverOptions& opts, double frozen_lambda,
                      const Eigen::VectorXd* warm, Eigen::VectorXd& c) {
  std::vector<double> lambda_seeds;
  if (frozen_lambda >= 0.0)
    lambda_seeds = {frozen_lambda};
  else
    lambda_seeds = {opts.lambda0, opts.lambda0 / 10.0, opts.lambda0 / 100.0};

  // A pinned bound multiplier stays at the gauge; otherwise it may grow
  // geometrically until the start is strictly feasible.
  auto try_scaling = [&](Eigen::VectorXd& cand) {
    for (int e = 0; e <= 60; ++e) {
      if (std::isfinite(B.value(cand, 1.0))) return true;
      if (B.pinned >= 0) return false;
      if (g.bound_alpha < 0 || face.clamped[static_cast<size_t>(g.bound_alpha)]) return false;
      cand[1 + g.bound_alpha] *= 1.5;
    }
    return false;
  };

  if (warm != nullptr && frozen_lambda >= 0.0 && warm->size() == g.nalpha) {
    c.setZero(1 + g.nalpha);
    c[0] = frozen_lambda;
    for (int a = 0; a < g.nalpha; ++a)
      if (!face.clamped[static_cast<size_t>(a)]) c[1 + a] = (*warm)[a];
    if (B.pinned >= 0) c[1 + B.pinned] = opts.alpha_gauge;
    Eigen::VectorXd cand = c;
    if (try_scaling(cand)) {
      c = cand;
      return true;
    }
  }
  for (double l0 : lambda_seeds) {
    if (l0 <= 0.0) continue;
    c.setZero(1 + g.nalpha);
    c[0] = l0;
    for (int a = 0; a < g.nalpha; ++a)
      if (!face.clamped[static_cast<size_t>(a)])
        c[1 + a] = g.subset_size[static_cast<size_t>(a)] == 1 ? 0.1 : 0.01;
    if (B.pinned >= 0) c[1 + B.pinned] = opts.alpha_gauge;
    Eigen::VectorXd cand = c;
    if (try_scaling(cand)) {
      c = cand;
      return true;
    }
  }
  return false;
}

// frozen_lambda < 0 leaves lambda free; otherwise only the multipliers move
// (pure centering for the backoff loop).
NlpSolution solve_barrier(const CompiledGram& g, const SolverOptions& opts,
                          double frozen_lambda, const Eigen::VectorXd* warm) {
  NlpSolution sol;
  sol.alpha = Eigen::VectorXd::Zero(g.nalpha);
  FaceAnalysis face = analyze_certificate_face(g);
  if (face.impossible || face.alive.empty()) {
    sol.structurally_blocked = face.impossible;
    sol.blocked_row = face.blocked_row;
    return sol;
  }

  bool lambda_free = frozen_lambda < 0.0;
  int pinned = -1;
  if (opts.alpha_gauge > 0.0 && g.bound_alpha >= 0 &&
      !face.clamped[static_cast<size_t>(g.bound_alpha)])
    pinned = g.bound_alpha;
  Barrier B(g, face, lambda_free, pinned);

  Eigen::VectorXd c;
  if (!restore_feasible(B, g, face, opts, frozen_lambda, warm, c)) return sol;
  if (B.free_coords.empty()) {
    // Nothing to optimize; the restored point itself is the answer.
    sol.lambda = c[0];
    for (int a = 0; a < g.nalpha; ++a) sol.alpha[a] = c[1 + a];
    sol.status = SolveStatus::converged;
    return sol;
  }

  double mu = opts.mu0;
  double lambda_prev = c[0];
  int iters = 0;
  sol.status = SolveStatus::max_iter;
  for (int outer = 1; outer <= 100; ++outer) {
    double gtol = std::max(1e-9, 1e-3 * mu);
    int budget = std::min(200, opts.max_iter - iters);
    if (budget <= 0) break;
    iters += inner_solve(B, c, mu, budget, gtol);
    sol.objective_trace.push_back(c[0]);
    bool settled = lambda_free && outer >= 2 && std::fabs(c[0] - lambda_prev) < opts.outer_tol;
    lambda_prev = c[0];
    mu *= opts.mu_factor;
    if (settled || mu < opts.mu_floor) {
      sol.status = SolveStatus::converged;
      break;
    }
    if (iters >= opts.max_iter) break;
  }
  sol.iterations = iters;
  sol.lambda = c[0];
  for (int a = 0; a < g.nalpha; ++a) sol.alpha[a] = c[1 + a];
  return sol;
}

}  // namespace

NlpSolution solve_nlp(const CompiledGram& g, const SolverOptions& opts) {
  return solve_barrier(g, opts, -1.0, nullptr);
}

double min_symmetric_eigenvalue(const Eigen::MatrixXd& Q) {
  int n = static_cast<int>(Q.rows());
  if (n == 1) return Q(0, 0);
  Eigen::Tridiagonalization<Eigen::MatrixXd> tri(Q);
  Eigen::VectorXd d = tri.matrixT().diagonal();
  Eigen::VectorXd e = tri.matrixT().diagonal(-1);

  // Sturm count: number of eigenvalues below x.
  auto count_below = [&](double x) {
    int cnt = 0;
    double q = d[0] - x;
    if (q < 0.0) ++cnt;
    for (int i = 1; i < n; ++i) {
      double denom = q == 0.0 ? 1e-300 : q;
      q = d[i] - x - e[i - 1] * e[i - 1] / denom;
      if (q < 0.0) ++cnt;
    }
    return cnt;
  };

  double lo = d[0], hi = d[0];
  for (int i = 0; i < n; ++i) {
    double rad = (i > 0 ? std::fabs(e[i - 1]) : 0.0) + (i < n - 1 ? std::fabs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - rad);
    hi = std::max(hi, d[i] + rad);
  }
  if (count_below(lo) != 0) lo -= 1.0 + std::fabs(lo);
  for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(lo) + std::fabs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

PsdCheck post_check_psd(const CompiledGram& g, const NlpSolution& sol, double tol) {
  Eigen::MatrixXd Q = g.assemble(sol.lambda, sol.alpha);
  PsdCheck out;
  out.min_eigenvalue = min_symmetric_eigenvalue(Q);
  out.certified = out.min_eigenvalue >= -tol;
  return out;
}

NlpSolution certify_with_backoff(const CompiledGram& g, NlpSolution sol,
                                 const SolverOptions& opts) {
  if (sol.status == SolveStatus::infeasible) return sol;
  for (int round = 0; round <= opts.backoff_rounds; ++round) {
    PsdCheck pc = post_check_psd(g, sol, opts.psd_tol);
    sol.min_eigenvalue = pc.min_eigenvalue;
    bool ok = pc.certified && minors_nonnegative(g, sol.lambda, sol.alpha, opts.feas_tol);
    if (ok) {
      sol.certified = true;
      sol.backoff_count = round;
      return sol;
    }
    if (round == opts.backoff_rounds) break;
    sol.lambda *= opts.backoff_factor;
    NlpSolution re = solve_barrier(g, opts, sol.lambda, &sol.alpha);
    sol.iterations += re.iterations;
    if (re.status == SolveStatus::infeasible) break;
    sol.alpha = re.alpha;
  }
  sol.certified = false;
  sol.status = SolveStatus::infeasible;
  sol.backoff_count = opts.backoff_rounds;
  sol.lambda = 0.0;  // a rejected point is never reported as a bound
  return sol;
}

}  // namespace jte
