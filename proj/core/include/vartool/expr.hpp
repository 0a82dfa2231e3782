#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vartool/atom.hpp"
#include "vartool/rational.hpp"

namespace vartool {

struct Factor {
  Atom atom;
  Exponent exp;
  friend bool operator==(const Factor&, const Factor&) = default;
};

/// Factors sorted by atom, one factor per atom, no zero exponents.
using Monomial = std::vector<Factor>;

struct Term {
  Monomial mono;
  Rational coef;
};

int compare(const Monomial& a, const Monomial& b);
std::size_t hash_monomial(const Monomial& m);
/// Exponent of `a` in `m` (zero when absent).
Exponent exponent_of(const Monomial& m, const Atom& a);

/// Immutable polynomial-like expression in canonical normal form.
///
/// Terms are sorted by monomial; integer powers of sums are expanded; sums
/// raised to negative or fractional powers are atoms whose negative-power
/// coefficients are kept reduced modulo the body, which makes the form
/// canonical for rational functions with a single denominator family.
class Expr {
 public:
  Expr();
  Expr(int v) : Expr(Rational(v)) {}  // NOLINT(google-explicit-constructor)
  Expr(long long v) : Expr(Rational(v)) {}  // NOLINT(google-explicit-constructor)
  Expr(const Rational& c);  // NOLINT(google-explicit-constructor)
  Expr(const Atom& a);  // NOLINT(google-explicit-constructor)

  /// Canonicalizes an arbitrary list of terms.
  static Expr from_terms(std::vector<Term> terms);

  bool is_zero() const { return terms().empty(); }
  bool is_constant() const;
  /// Value when the expression is a rational constant.
  std::optional<Rational> constant_value() const;
  /// The atom when the expression is exactly one atom with coefficient 1.
  std::optional<Atom> as_atom() const;
  std::size_t size() const { return terms().size(); }
  const std::vector<Term>& terms() const;
  std::size_t hash() const;

  /// Whether `a` occurs anywhere, including inside power bodies.
  bool contains(const Atom& a) const;
  bool contains_if(const std::function<bool(const Atom&)>& pred) const;
  /// Non-power atoms occurring anywhere, sorted and unique.
  std::vector<Atom> free_atoms() const;

  Expr operator-() const;
  Expr& operator+=(const Expr& o) { return *this = *this + o; }
  Expr& operator-=(const Expr& o) { return *this = *this - o; }
  Expr& operator*=(const Expr& o) { return *this = *this * o; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator*(const Rational& c, const Expr& e);
  friend Expr operator*(const Expr& e, const Rational& c) { return c * e; }
  friend Expr operator/(const Expr& e, const Rational& c) { return c.inverse() * e; }
  friend Expr operator*(int c, const Expr& e) { return Rational(c) * e; }
  friend Expr operator*(const Expr& e, int c) { return Rational(c) * e; }
  friend Expr operator/(const Expr& e, int c) { return Rational(1, c) * e; }
  friend bool operator==(const Expr& a, const Expr& b);

  /// Plain-text rendering with generic atom names (debugging aid).
  std::string str() const;

  struct Data;

 private:
  explicit Expr(std::shared_ptr<const Data> d) : d_(std::move(d)) {}
  friend struct ExprAccess;
  std::shared_ptr<const Data> d_;
};

/// Total order on canonical expressions (used for power atoms).
int compare(const Expr& a, const Expr& b);

/// `base^q`; rejects 0 raised to a non-positive power.
Expr pow(const Expr& base, const Exponent& q);

/// Sum of a list of expressions in one pass.
Expr sum(const std::vector<Expr>& parts);

/// Derivative with respect to a base, jet or external atom.
Expr partial_derivative(const Expr& e, const Atom& a);

/// Derivative of each non-power atom, used by `apply_derivation`.
using AtomDerivative = std::function<Expr(const Atom&)>;
/// Cache of derivatives of power bodies, keyed by power atom.
using PowerCache = std::unordered_map<Atom, Expr>;

/// Applies the derivation determined by `d` on atoms, with the chain rule
/// through powers of sums.  `cache` may be shared between calls that use the
/// same `d`.
Expr apply_derivation(const Expr& e, const AtomDerivative& d, PowerCache* cache = nullptr);

using Bindings = std::unordered_map<Atom, Expr>;

/// Simultaneous substitution of non-power atoms.  Throws
/// SingularSubstitution when a power body becomes 0 under a negative power.
Expr substitute(const Expr& e, const Bindings& bindings);

bool is_zero_symbolic(const Expr& e);

/// Remainder of `e` under the division algorithm by each relation
/// (`relation == 0` is the rule).  Powers of sums count as variables with
/// Laurent divisibility.
Expr reduce_modulo(const Expr& e, const std::vector<Expr>& relations);

/// Groups terms by the product of the factors selected by `pred`.
/// Returns (selected monomial, coefficient expression) pairs.
std::vector<std::pair<Monomial, Expr>> split_terms(const Expr& e, const std::function<bool(const Atom&)>& pred);

/// Expression of a single monomial with coefficient 1.
Expr monomial_expr(const Monomial& m);

/// Expression tree accepted by `normalize`.
struct Raw {
  enum class Kind { Number, Float, Atom, Sum, Product, Power };
  Kind kind = Kind::Number;
  Rational number;
  double float_value = 0.0;
  std::optional<vartool::Atom> atom;
  std::vector<Raw> args;
  Exponent exponent;

  static Raw num(Rational r);
  static Raw flt(double v);
  static Raw sym(vartool::Atom a);
  static Raw add(std::vector<Raw> parts);
  static Raw mul(std::vector<Raw> parts);
  static Raw power(Raw base, Exponent q);
};

/// Canonical form of a raw tree; rejects floating literals.
Expr normalize(const Raw& raw);

/// Names for the atoms of an expression; `nullptr` members fall back to
/// generic names.
struct AtomNamer {
  std::function<std::string(const Atom&)> text;
  std::function<std::string(const Atom&)> latex;
};

/// Renders in the model-file expression syntax (re-parseable).
std::string to_text(const Expr& e, const AtomNamer& namer = {});
/// Renders as a LaTeX math fragment.
std::string to_latex(const Expr& e, const AtomNamer& namer = {});

}  // namespace vartool

template <>
struct std::hash<vartool::Expr> {
  std::size_t operator()(const vartool::Expr& e) const noexcept { return e.hash(); }
};
