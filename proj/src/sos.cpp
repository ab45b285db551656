#include "jte/sos.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace jte {

RefuteGenerators build_refute_generators(const Polynomial& g, const DeviationVars& dev) {
  RefuteGenerators out;
  out.gamma0 = -g;
  for (VarId y : dev.y)
    out.gamma.push_back(Polynomial(1.0) - Polynomial::term(Monomial::var(y, 2), 1.0));
  return out;
}

std::vector<ConeTerm> enumerate_cone_terms(const RefuteGenerators& gens, int order,
                                           VariableSet& vars) {
  int n = static_cast<int>(gens.gamma.size());
  if (order < 1 || order > n + 1)
    throw std::invalid_argument("cone order must be between 1 and dof + 1");

  // Subsets of {0..n}, size-major, lexicographic within a size group.
  std::vector<std::vector<int>> by_size;
  for (int size = 1; size <= order; ++size) {
    std::vector<int> pick;
    auto rec = [&](auto&& self, int next) -> void {
      if (static_cast<int>(pick.size()) == size) {
        by_size.push_back(pick);
        return;
      }
      for (int j = next; j <= n; ++j) {
        pick.push_back(j);
        self(self, j + 1);
        pick.pop_back();
      }
    };
    rec(rec, 0);
  }

  std::vector<ConeTerm> out;
  for (const auto& S : by_size) {
    ConeTerm t;
    t.subset = S;
    std::string name = "alpha_";
    for (int j : S) name += std::to_string(j);
    t.alpha = vars.add(name, VarKind::multiplier);
    t.product = Polynomial(1.0);
    for (int j : S)
      t.product = t.product * (j == 0 ? gens.gamma0 : gens.gamma[static_cast<size_t>(j - 1)]);
    out.push_back(std::move(t));
  }
  return out;
}

Polynomial assemble_p0(const std::vector<ConeTerm>& terms) {
  if (terms.empty()) throw std::invalid_argument("assemble_p0: no cone terms");
  Polynomial p0(-1.0);
  for (const ConeTerm& t : terms) p0 -= Polynomial::variable(t.alpha) * t.product;
  return p0;
}

std::vector<Monomial> gram_basis(const std::vector<VarId>& y, int d) {
  std::vector<Monomial> out;
  std::vector<int> expo(y.size(), 0);
  auto rec = [&](auto&& self, size_t idx, int remaining) -> void {
    if (idx == y.size()) {
      Monomial m;
      for (size_t i = 0; i < y.size(); ++i)
        if (expo[i] > 0) m = m.times(Monomial::var(y[i], expo[i]));
      out.push_back(m);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      expo[idx] = e;
      self(self, idx + 1, remaining - e);
    }
    expo[idx] = 0;
  };
  rec(rec, 0, d);
  std::sort(out.begin(), out.end(), GrlexLess{});
  return out;
}

const Polynomial& GramProblem::entry(int i, int j) const {
  static const Polynomial zero;
  auto it = entries.find({std::min(i, j), std::max(i, j)});
  return it == entries.end() ? zero : it->second;
}

Polynomial GramProblem::reconstruct() const {
  Polynomial out;
  for (const auto& [key, q] : entries) {
    Polynomial yy = Polynomial::term(basis[static_cast<size_t>(key.first)].times(
                                         basis[static_cast<size_t>(key.second)]),
                                     key.first == key.second ? 1.0 : 2.0);
    out += q * yy;
  }
  return out;
}

GramProblem build_gram(const Polynomial& p0, const std::vector<VarId>& y) {
  std::set<VarId> yset(y.begin(), y.end());
  int deg = p0.degree_in(yset);
  if (deg % 2 != 0) throw std::invalid_argument("build_gram: odd degree in deviation variables");

  GramProblem gp;
  gp.half_degree = deg / 2;
  gp.basis = gram_basis(y, gp.half_degree);

  std::map<Monomial, int, GrlexLess> index;
  for (int i = 0; i < gp.size(); ++i) index[gp.basis[static_cast<size_t>(i)]] = i;

  for (auto& [m, w] : p0.collect_by(yset)) {
    if (m.is_square()) {
      auto it = index.find(m.square_root());
      if (it == index.end()) throw std::logic_error("build_gram: square root not in basis");
      int i = it->second;
      auto [slot, inserted] = gp.entries.try_emplace({i, i}, w);
      if (!inserted) slot->second += w;
      continue;
    }
    // Graded-lex-first divisor pair. basis[0] = 1 divides everything, so any
    // monomial of degree <= d lands in row 0.
    bool placed = false;
    for (int i = 0; i < gp.size() && !placed; ++i) {
      const Monomial& yi = gp.basis[static_cast<size_t>(i)];
      if (!yi.divides(m)) continue;
      auto it = index.find(yi.quotient_of(m));
      if (it == index.end() || it->second <= i) continue;
      int j = it->second;
      Polynomial half = 0.5 * w;
      auto [slot, inserted] = gp.entries.try_emplace({i, j}, half);
      if (!inserted) slot->second += half;
      placed = true;
    }
    if (!placed) throw std::logic_error("build_gram: monomial admits no basis factor pair");
  }
  return gp;
}

}  // namespace jte
