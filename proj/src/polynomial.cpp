#include "jte/polynomial.hpp"

#include <algorithm>
#include <cmath>

namespace jte {

VarId VariableSet::add(const std::string& name, VarKind kind) {
  auto it = index_.find(name);
  if (it != index_.end()) throw std::invalid_argument("duplicate variable: " + name);
  VarId v = static_cast<VarId>(names_.size());
  names_.push_back(name);
  kinds_.push_back(kind);
  index_[name] = v;
  return v;
}

VarId VariableSet::id(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::invalid_argument("unknown variable: " + name);
  return it->second;
}

Monomial Monomial::var(VarId v, int exp) {
  Monomial m;
  if (exp < 0) throw std::invalid_argument("negative exponent");
  if (exp > 0) m.factors_.push_back({v, exp});
  return m;
}

int Monomial::degree() const {
  int d = 0;
  for (auto& [v, e] : factors_) d += e;
  return d;
}

int Monomial::degree_in(const std::set<VarId>& vars) const {
  int d = 0;
  for (auto& [v, e] : factors_)
    if (vars.count(v)) d += e;
  return d;
}

int Monomial::exponent(VarId v) const {
  for (auto& [w, e] : factors_)
    if (w == v) return e;
  return 0;
}

Monomial Monomial::times(const Monomial& other) const {
  Monomial out;
  auto a = factors_.begin(), b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.push_back({a->first, a->second + b->second});
      ++a;
      ++b;
    }
  }
  return out;
}

bool Monomial::divides(const Monomial& m) const {
  for (auto& [v, e] : factors_)
    if (m.exponent(v) < e) return false;
  return true;
}

Monomial Monomial::quotient_of(const Monomial& m) const {
  Monomial out;
  for (auto& [v, e] : m.factors_) {
    int r = e - exponent(v);
    if (r < 0) throw std::invalid_argument("non-divisible quotient");
    if (r > 0) out.factors_.push_back({v, r});
  }
  return out;
}

bool Monomial::is_square() const {
  for (auto& [v, e] : factors_)
    if (e % 2 != 0) return false;
  return true;
}

Monomial Monomial::square_root() const {
  Monomial out;
  for (auto& [v, e] : factors_) {
    if (e % 2 != 0) throw std::logic_error("square_root of non-square");
    out.factors_.push_back({v, e / 2});
  }
  return out;
}

Monomial Monomial::project(const std::set<VarId>& vars) const {
  Monomial out;
  for (auto& [v, e] : factors_)
    if (vars.count(v)) out.factors_.push_back({v, e});
  return out;
}

Monomial Monomial::drop(const std::set<VarId>& vars) const {
  Monomial out;
  for (auto& [v, e] : factors_)
    if (!vars.count(v)) out.factors_.push_back({v, e});
  return out;
}

bool GrlexLess::operator()(const Monomial& a, const Monomial& b) const {
  int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Same degree: compare exponent vectors lexicographically by VarId,
  // higher exponent on the earliest differing variable sorts first.
  auto ia = a.factors_.begin(), ib = b.factors_.begin();
  while (ia != a.factors_.end() && ib != b.factors_.end()) {
    if (ia->first != ib->first) return ia->first < ib->first;
    if (ia->second != ib->second) return ia->second > ib->second;
    ++ia;
    ++ib;
  }
  return false;  // equal
}

Polynomial::Polynomial(double constant) {
  if (constant != 0.0) terms_[Monomial::one()] = constant;
}

Polynomial Polynomial::variable(VarId v) { return term(Monomial::var(v), 1.0); }

Polynomial Polynomial::term(const Monomial& m, double coeff) {
  Polynomial p;
  if (coeff != 0.0) p.terms_[m] = coeff;
  return p;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

int Polynomial::total_degree() const {
  int d = 0;
  for (auto& [m, c] : terms_) d = std::max(d, m.degree());
  return d;
}

int Polynomial::degree_in(const std::set<VarId>& vars) const {
  int d = 0;
  for (auto& [m, c] : terms_) d = std::max(d, m.degree_in(vars));
  return d;
}

std::set<VarId> Polynomial::variables() const {
  std::set<VarId> out;
  for (auto& [m, c] : terms_)
    for (auto& [v, e] : m.factors()) out.insert(v);
  return out;
}

void Polynomial::add_term(const Monomial& m, double coeff) {
  if (coeff == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  for (auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  for (auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial Polynomial::operator-() const {
  Polynomial out;
  for (auto& [m, c] : terms_) out.terms_[m] = -c;
  return out;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (auto& [ma, ca] : a.terms_)
    for (auto& [mb, cb] : b.terms_) out.add_term(ma.times(mb), ca * cb);
  return out;
}

Polynomial operator*(double s, const Polynomial& p) {
  Polynomial out;
  if (s == 0.0) return out;
  for (auto& [m, c] : p.terms()) out.add_term(m, s * c);
  return out;
}

double Polynomial::evaluate(const std::map<VarId, double>& assignment) const {
  double sum = 0.0;
  for (auto& [m, c] : terms_) {
    double t = c;
    for (auto& [v, e] : m.factors()) {
      auto it = assignment.find(v);
      if (it == assignment.end())
        throw std::invalid_argument("evaluate: unassigned variable id " + std::to_string(v));
      t *= std::pow(it->second, e);
    }
    sum += t;
  }
  return sum;
}

double Polynomial::evaluate_dense(const std::vector<double>& values) const {
  double sum = 0.0;
  for (auto& [m, c] : terms_) {
    double t = c;
    for (auto& [v, e] : m.factors()) {
      double x = values[static_cast<size_t>(v)];
      for (int k = 0; k < e; ++k) t *= x;
    }
    sum += t;
  }
  return sum;
}

Polynomial Polynomial::derivative(VarId v) const {
  Polynomial out;
  for (auto& [m, c] : terms_) {
    int e = m.exponent(v);
    if (e == 0) continue;
    Monomial reduced;
    for (auto& [w, k] : m.factors()) {
      int nk = (w == v) ? k - 1 : k;
      if (nk > 0) reduced = reduced.times(Monomial::var(w, nk));
    }
    out.add_term(reduced, c * e);
  }
  return out;
}

Polynomial Polynomial::substitute(const std::map<VarId, Polynomial>& repl) const {
  Polynomial out;
  for (auto& [m, c] : terms_) {
    Polynomial acc(c);
    for (auto& [v, e] : m.factors()) {
      auto it = repl.find(v);
      if (it == repl.end()) {
        acc = acc * Polynomial::term(Monomial::var(v, e), 1.0);
      } else {
        for (int k = 0; k < e; ++k) acc = acc * it->second;
      }
    }
    out += acc;
  }
  return out;
}

std::map<Monomial, Polynomial, GrlexLess> Polynomial::collect_by(
    const std::set<VarId>& vars) const {
  std::map<Monomial, Polynomial, GrlexLess> out;
  for (auto& [m, c] : terms_) out[m.project(vars)].add_term(m.drop(vars), c);
  return out;
}

double Polynomial::max_abs_coefficient() const {
  double b = 0.0;
  for (auto& [m, c] : terms_) b = std::max(b, std::fabs(c));
  return b;
}

}  // namespace jte
