#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace jte {

using VarId = std::int32_t;

enum class VarKind { deviation, tolerance, multiplier };

// Registry of problem variables. Ids are dense and stable; names are unique.
class VariableSet {
 public:
  VarId add(const std::string& name, VarKind kind);
  VarId id(const std::string& name) const;
  const std::string& name(VarId v) const { return names_.at(v); }
  VarKind kind(VarId v) const { return kinds_.at(v); }
  int size() const { return static_cast<int>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::vector<VarKind> kinds_;
  std::map<std::string, VarId> index_;
};

// Power product of variables. Factors are kept sorted by VarId with
// strictly positive exponents; the empty product is 1.
class Monomial {
 public:
  Monomial() = default;
  static Monomial one() { return Monomial(); }
  static Monomial var(VarId v, int exp = 1);

  int degree() const;
  int degree_in(const std::set<VarId>& vars) const;
  int exponent(VarId v) const;
  bool is_one() const { return factors_.empty(); }

  Monomial times(const Monomial& other) const;
  bool divides(const Monomial& m) const;
  // Quotient m_this^{-1} * m; caller must ensure divisibility.
  Monomial quotient_of(const Monomial& m) const;

  bool is_square() const;
  Monomial square_root() const;  // valid only when is_square()

  // Restriction to a variable subset (used to split mixed monomials).
  Monomial project(const std::set<VarId>& vars) const;
  Monomial drop(const std::set<VarId>& vars) const;

  const std::vector<std::pair<VarId, int>>& factors() const { return factors_; }

  bool operator==(const Monomial& o) const { return factors_ == o.factors_; }

 private:
  std::vector<std::pair<VarId, int>> factors_;
  friend struct GrlexLess;
};

// Graded lexicographic order: lower total degree first; ties broken so that
// a higher exponent on the earliest variable comes first (y1^2 < y1*y2 < y2^2).
struct GrlexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

// Sparse multivariate polynomial with double coefficients. Terms with
// coefficient exactly 0.0 are never stored, so the representation is
// canonical for exactly-representable arithmetic.
class Polynomial {
 public:
  using TermMap = std::map<Monomial, double, GrlexLess>;

  Polynomial() = default;
  explicit Polynomial(double constant);
  static Polynomial variable(VarId v);
  static Polynomial term(const Monomial& m, double coeff);

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int term_count() const { return static_cast<int>(terms_.size()); }
  double coefficient(const Monomial& m) const;
  double constant_term() const { return coefficient(Monomial::one()); }

  int total_degree() const;
  int degree_in(const std::set<VarId>& vars) const;
  std::set<VarId> variables() const;

  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial operator-() const;
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double s, const Polynomial& p);

  bool operator==(const Polynomial& o) const { return terms_ == o.terms_; }

  // Throws std::invalid_argument when a variable of the polynomial is
  // missing from the assignment.
  double evaluate(const std::map<VarId, double>& assignment) const;
  // Fast path: dense vector indexed by VarId, no completeness check.
  double evaluate_dense(const std::vector<double>& values) const;

  // Derivative with respect to one variable.
  Polynomial derivative(VarId v) const;

  // Substitutes polynomials for the given variables; untouched variables
  // pass through.
  Polynomial substitute(const std::map<VarId, Polynomial>& repl) const;

  // Groups terms by their monomial part in `vars`: the result maps each
  // projected monomial to the polynomial coefficient in the remaining
  // variables. Summing monomial * coefficient recovers the polynomial.
  std::map<Monomial, Polynomial, GrlexLess> collect_by(const std::set<VarId>& vars) const;

  // Largest absolute coefficient, 0 for the zero polynomial.
  double max_abs_coefficient() const;

  void add_term(const Monomial& m, double coeff);

 private:
  TermMap terms_;
};

}  // namespace jte
