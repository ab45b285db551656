#pragma once

#include <map>
#include <utility>
#include <vector>

#include "jte/kinematics.hpp"
#include "jte/polynomial.hpp"

namespace jte {

// Nonnegativity generators of the refutation problem: gamma0 = -g must hold
// where the bound is violated, gamma_i = 1 - y_i^2 bounds each deviation.
struct RefuteGenerators {
  Polynomial gamma0;
  std::vector<Polynomial> gamma;  // gamma[i] is 1 - y_{i+1}^2
};

RefuteGenerators build_refute_generators(const Polynomial& g, const DeviationVars& dev);

// One product of generators over an index subset, scaled by a scalar
// multiplier variable registered in the shared universe.
struct ConeTerm {
  std::vector<int> subset;  // indices into {0..n}, ascending
  VarId alpha;
  Polynomial product;
};

// All nonempty subsets of {0..n} with size <= order, sorted by size then
// lexicographically. Registers one multiplier variable per term.
std::vector<ConeTerm> enumerate_cone_terms(const RefuteGenerators& gens, int order,
                                           VariableSet& vars);

// p0 = -sum_S alpha_S * prod_{j in S} gamma_j - 1. Infeasibility of the
// sampled region is certified when p0 admits a PSD Gram matrix, since p0
// would then be both >= 0 (sum of squares) and <= -1 on the region.
Polynomial assemble_p0(const std::vector<ConeTerm>& terms);

// Gram form p0 = Y^T Q Y with Y the monomial basis in y of degree <= d and
// Q symmetric with entries polynomial in (lambda, alpha...). Entries are
// stored upper-triangular.
struct GramProblem {
  std::vector<Monomial> basis;
  std::map<std::pair<int, int>, Polynomial> entries;  // key (i, j) with i <= j
  int half_degree = 0;

  const Polynomial& entry(int i, int j) const;  // symmetric accessor
  Polynomial reconstruct() const;               // Y^T Q Y as a polynomial
  int size() const { return static_cast<int>(basis.size()); }
};

// Monomials in the given variables with total degree <= d, graded-lex
// ascending, so basis[0] = 1.
std::vector<Monomial> gram_basis(const std::vector<VarId>& y, int d);

// Assigns each y-monomial of p0 to exactly one Gram position: squares of
// basis monomials go to the diagonal, anything else to the graded-lex-first
// factor pair at half weight each side.
GramProblem build_gram(const Polynomial& p0, const std::vector<VarId>& y);

}  // namespace jte
