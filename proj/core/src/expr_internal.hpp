#pragma once

#include <string>
#include <vector>

#include "vartool/expr.hpp"

namespace vartool {

struct Expr::Data {
  std::vector<Term> terms;
  std::size_t hash = 0;
  // Some factor is a power of a sum with a negative exponent.
  bool has_negative_power = false;
};

struct AtomPayload {
  std::string name;
  std::vector<int> comps;
  // Power atoms only.
  Expr body;
  Expr normal;
  int sign = 1;
  std::size_t normal_hash = 0;
  // Power atom of `normal` when sign < 0 (at most one element).
  std::vector<Atom> normal_atom;
};

struct ExprAccess {
  static Expr make(std::vector<Term> sorted_terms);
  static const Expr::Data& data(const Expr& e) { return *e.d_; }
};

Atom make_power_atom(const Expr& body);
const AtomPayload& payload_of(const Atom& a);
/// Power atom of the positive-leading-coefficient body.
inline const Atom& normal_power_atom(const Atom& a) {
  const AtomPayload& p = payload_of(a);
  return p.normal_atom.empty() ? a : p.normal_atom.front();
}

inline std::size_t mix_hash(std::size_t h, std::size_t v) {
  std::uint64_t x = h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return static_cast<std::size_t>(x);
}

/// Monomial product (exponents added, zero exponents dropped).
Monomial mono_mul(const Monomial& a, const Monomial& b);

/// Sorts terms by monomial, merges equal monomials and drops zeros.
void combine_terms(std::vector<Term>& terms);

}  // namespace vartool
