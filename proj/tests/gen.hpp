#pragma once

#include <random>
#include <vector>

#include "vartool/expr.hpp"
#include "doctest.h"

namespace vt_test {

using vartool::Atom;
using vartool::Expr;
using vartool::Exponent;
using vartool::Rational;

/// Small random-expression generator over a fixed atom pool.
class ExprGen {
 public:
  explicit ExprGen(std::uint64_t seed, std::vector<Atom> pool) : rng_(seed), pool_(std::move(pool)) {}

  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  Rational coef() {
    int num = uniform(-5, 5);
    if (num == 0) num = 1;
    return Rational(num, uniform(1, 3));
  }
  const Atom& atom() { return pool_[static_cast<std::size_t>(uniform(0, static_cast<int>(pool_.size()) - 1))]; }

  Expr monomial(int max_deg = 2) {
    Expr m(coef());
    int deg = uniform(0, max_deg);
    for (int k = 0; k < deg; ++k) m *= Expr(atom());
    return m;
  }

  Expr polynomial(int max_terms = 3, int max_deg = 2) {
    Expr p;
    int n = uniform(1, max_terms);
    for (int k = 0; k < n; ++k) p += monomial(max_deg);
    return p;
  }

  /// Polynomial possibly multiplied by a rational power of a positive-ish sum.
  Expr with_powers(bool allow_powers = true) {
    Expr e = polynomial();
    if (allow_powers && uniform(0, 2) == 0) {
      Expr body = Expr(1) + Expr(atom()) * Expr(atom());
      static const Exponent qs[] = {Exponent(1, 2), Exponent(-1, 2), Exponent(-1), Exponent(3, 2)};
      e *= vartool::pow(body, qs[uniform(0, 3)]);
    }
    return e;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::vector<Atom> pool_;
};

}  // namespace vt_test

namespace doctest {
template <>
struct StringMaker<vartool::Expr> {
  static String convert(const vartool::Expr& e) { return e.str().c_str(); }
};
}  // namespace doctest
