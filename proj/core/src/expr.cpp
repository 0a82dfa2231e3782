#include "vartool/expr.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "expr_internal.hpp"
#include "vartool/error.hpp"

namespace vartool {

namespace {

const std::shared_ptr<const Expr::Data>& zero_data() {
  static const std::shared_ptr<const Expr::Data> d = std::make_shared<const Expr::Data>();
  return d;
}

int cmp_factor(const Factor& a, const Factor& b) {
  if (auto c = a.atom <=> b.atom; c != 0) return c < 0 ? -1 : 1;
  if (auto c = a.exp <=> b.exp; c != 0) return c < 0 ? -1 : 1;
  return 0;
}

bool mono_less(const Term& a, const Term& b) { return compare(a.mono, b.mono) < 0; }

// Binary search for the factor of `a`; returns m.size() when absent.
std::size_t find_factor(const Monomial& m, const Atom& a) {
  auto it = std::lower_bound(m.begin(), m.end(), a, [](const Factor& f, const Atom& x) { return f.atom < x; });
  if (it != m.end() && it->atom == a) return static_cast<std::size_t>(it - m.begin());
  return m.size();
}

void insert_factor(Monomial& m, Factor f) {
  auto it = std::lower_bound(m.begin(), m.end(), f.atom, [](const Factor& x, const Atom& a) { return x.atom < a; });
  m.insert(it, std::move(f));
}

bool is_const_body(const Atom& a) { return a.body().is_constant(); }

Expr finish(std::vector<Term> terms);
Expr reduce_expr(const Expr& e);

// Whether a single term violates the power invariants: a power exponent is
// either negative-integer on a positive-leading body, or has a fractional
// part below 1; constant bodies only carry exponents in (0, 1).
bool needs_fix(const Term& t) {
  int npow = 0;
  for (const Factor& f : t.mono) {
    if (!f.atom.is_power()) continue;
    ++npow;
    if (is_const_body(f.atom)) {
      if (!(f.exp > Exponent(0) && f.exp < Exponent(1))) return true;
    } else if (f.exp >= Exponent(1)) {
      return true;
    } else if (f.exp.is_integer() && f.atom.body_sign() < 0) {
      return true;
    }
  }
  if (npow < 2) return false;
  for (std::size_t i = 0; i < t.mono.size(); ++i) {
    if (!t.mono[i].atom.is_power()) continue;
    for (std::size_t j = i + 1; j < t.mono.size(); ++j) {
      if (!t.mono[j].atom.is_power()) continue;
      if (!t.mono[i].exp.is_integer() && !t.mono[j].exp.is_integer()) continue;
      if (same_body_up_to_sign(t.mono[i].atom, t.mono[j].atom)) return true;
    }
  }
  return false;
}

Expr int_pow(const Expr& b, long long k) {
  Expr result(1);
  Expr base = b;
  while (k > 0) {
    if (k & 1) result = result * base;
    k >>= 1;
    if (k > 0) base = base * base;
  }
  return result;
}

Expr fix_term(Term t) {
  Rational c = t.coef;
  Monomial& f = t.mono;
  // Merge B^a (-B)^k into one power of whichever body has the fractional exponent.
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f[i].atom.is_power() || f[i].exp.is_zero()) continue;
    for (std::size_t j = i + 1; j < f.size(); ++j) {
      if (!f[j].atom.is_power() || f[j].exp.is_zero() || f[i].exp.is_zero()) continue;
      if (!same_body_up_to_sign(f[i].atom, f[j].atom)) continue;
      std::size_t keep;
      std::size_t drop;
      if (f[j].exp.is_integer()) {
        keep = i;
        drop = j;
      } else if (f[i].exp.is_integer()) {
        keep = j;
        drop = i;
      } else {
        continue;
      }
      if (f[keep].atom.body_sign() != f[drop].atom.body_sign() && (f[drop].exp.num() % 2 != 0)) c = -c;
      f[keep].exp = f[keep].exp + f[drop].exp;
      f[drop].exp = Exponent(0);
    }
  }
  std::vector<Expr> expand;
  Monomial kept;
  kept.reserve(f.size());
  for (Factor& x : f) {
    if (x.exp.is_zero()) continue;
    if (!x.atom.is_power()) {
      kept.push_back(std::move(x));
      continue;
    }
    const Expr& body = x.atom.body();
    if (auto v = body.constant_value()) {
      long long fl = x.exp.floor();
      c *= v->pow(fl);
      Exponent rest = x.exp - Exponent(fl);
      if (!rest.is_zero()) kept.push_back({x.atom, rest});
    } else if (x.exp.is_integer()) {
      if (x.exp.num() > 0) {
        expand.push_back(int_pow(body, x.exp.num()));
      } else if (x.atom.body_sign() < 0) {
        if (x.exp.num() % 2 != 0) c = -c;
        kept.push_back({normal_power_atom(x.atom), x.exp});
      } else {
        kept.push_back(std::move(x));
      }
    } else {
      long long fl = x.exp.floor();
      if (fl >= 1) {
        expand.push_back(int_pow(body, fl));
        x.exp = x.exp - Exponent(fl);
      }
      kept.push_back(std::move(x));
    }
  }
  std::sort(kept.begin(), kept.end(), [](const Factor& a, const Factor& b) { return a.atom < b.atom; });
  std::vector<Term> one;
  one.push_back({std::move(kept), c});
  Expr r = reduce_expr(ExprAccess::make(std::move(one)));
  for (const Expr& x : expand) r = r * x;
  return r;
}

// ---- division by a body --------------------------------------------------

struct Divisor {
  std::vector<Atom> vars;
  Term lead;
  std::vector<Term> tail;
  bool laurent = false;
};

// Exponent of the variable `v` in `m`, matching powers up to the sign of
// their bodies.  `sign_atom` receives the matching atom.
Exponent var_exponent(const Monomial& m, const Atom& v, const Atom** match) {
  if (!v.is_power()) {
    std::size_t k = find_factor(m, v);
    if (k < m.size()) {
      if (match) *match = &m[k].atom;
      return m[k].exp;
    }
    return Exponent(0);
  }
  for (const Factor& f : m) {
    if (f.atom.is_power() && (f.atom == v || same_body_up_to_sign(f.atom, v))) {
      if (match) *match = &f.atom;
      return f.exp;
    }
  }
  return Exponent(0);
}

std::vector<Exponent> lex_key(const Monomial& m, const std::vector<Atom>& vars) {
  std::vector<Exponent> k;
  k.reserve(vars.size());
  for (const Atom& v : vars) k.push_back(var_exponent(m, v, nullptr));
  return k;
}

Divisor make_divisor(const Expr& b, bool laurent) {
  Divisor d;
  d.laurent = laurent;
  std::set<Atom> vars;
  for (const Term& t : b.terms())
    for (const Factor& f : t.mono) {
      bool dup = false;
      if (f.atom.is_power())
        for (const Atom& v : vars)
          if (same_body_up_to_sign(v, f.atom)) dup = true;
      if (!dup) vars.insert(f.atom);
    }
  d.vars.assign(vars.begin(), vars.end());
  std::size_t best = 0;
  std::vector<Exponent> best_key = lex_key(b.terms()[0].mono, d.vars);
  for (std::size_t i = 1; i < b.terms().size(); ++i) {
    auto k = lex_key(b.terms()[i].mono, d.vars);
    if (k > best_key) {
      best_key = std::move(k);
      best = i;
    }
  }
  d.lead = b.terms()[best];
  for (std::size_t i = 0; i < b.terms().size(); ++i)
    if (i != best) d.tail.push_back(b.terms()[i]);
  return d;
}

// If lead(d) divides m, returns the quotient term of m/lead (sign and
// coefficient included).
std::optional<Term> try_divide(const Term& m, const Divisor& d) {
  Monomial q = m.mono;
  Rational c = m.coef / d.lead.coef;
  for (const Factor& lf : d.lead.mono) {
    const Atom* match = nullptr;
    Exponent em = var_exponent(m.mono, lf.atom, &match);
    if (match == nullptr) return std::nullopt;
    if (lf.exp > Exponent(0)) {
      if (em < lf.exp) return std::nullopt;
    } else {
      if (!d.laurent || em > lf.exp) return std::nullopt;
    }
    if (!(*match == lf.atom)) {
      // Opposite body sign: (-B)^k = (-1)^k B^k needs an integer k.
      if (!lf.exp.is_integer()) return std::nullopt;
      if (lf.exp.num() % 2 != 0) c = -c;
    }
    std::size_t k = find_factor(q, *match);
    Exponent rest = q[k].exp - lf.exp;
    if (rest.is_zero()) {
      q.erase(q.begin() + static_cast<std::ptrdiff_t>(k));
    } else {
      q[k].exp = rest;
    }
  }
  return Term{std::move(q), c};
}

constexpr long kDivisionCap = 2000000;

// Multivariate division of a polynomial in term form by a divisor whose
// terms need no further canonicalization when multiplied.
void divide_terms(const std::vector<Term>& r, const Divisor& d, std::vector<Term>& quot, std::vector<Term>& rem) {
  struct Key {
    std::vector<Exponent> lex;
    Monomial mono;
  };
  auto greater = [](const Key& a, const Key& b) {
    if (a.lex != b.lex) return a.lex > b.lex;
    return compare(a.mono, b.mono) > 0;
  };
  std::map<Key, Rational, decltype(greater)> work(greater);
  auto add = [&](Monomial m, const Rational& c) {
    Key k{lex_key(m, d.vars), std::move(m)};
    auto [it, inserted] = work.try_emplace(std::move(k), c);
    if (!inserted) {
      it->second += c;
      if (it->second.is_zero()) work.erase(it);
    }
  };
  for (const Term& t : r) add(t.mono, t.coef);
  long steps = 0;
  while (!work.empty()) {
    if (++steps > kDivisionCap) throw ExprError("division by a power body did not terminate");
    auto it = work.begin();
    Term m{it->first.mono, it->second};
    work.erase(it);
    if (auto q = try_divide(m, d)) {
      for (const Term& t : d.tail) add(mono_mul(q->mono, t.mono), -(q->coef * t.coef));
      quot.push_back(std::move(*q));
    } else {
      rem.push_back(std::move(m));
    }
  }
}

// Reduces every coefficient of a negative power of `p` modulo its body,
// carrying quotients one power up.
bool reduce_body(std::vector<Term>& terms, const Atom& p) {
  std::map<Exponent, std::map<long long, std::vector<Term>>> classes;
  std::vector<Term> out;
  out.reserve(terms.size());
  for (Term& t : terms) {
    std::size_t k = find_factor(t.mono, p);
    if (k < t.mono.size() && t.mono[k].exp < Exponent(0)) {
      Exponent e = t.mono[k].exp;
      Exponent f = e.frac();
      Exponent depth = f - e;
      t.mono.erase(t.mono.begin() + static_cast<std::ptrdiff_t>(k));
      classes[f][depth.num()].push_back(std::move(t));
    } else {
      out.push_back(std::move(t));
    }
  }
  if (classes.empty()) {
    terms = std::move(out);
    return false;
  }
  bool changed = false;
  Divisor d = make_divisor(p.body(), false);
  for (auto& [f, byk] : classes) {
    long long top = byk.rbegin()->first;
    for (long long k = top; k >= 1; --k) {
      auto it = byk.find(k);
      if (it == byk.end()) continue;
      combine_terms(it->second);
      if (it->second.empty()) continue;
      std::vector<Term> quot;
      std::vector<Term> rem;
      divide_terms(it->second, d, quot, rem);
      it->second = std::move(rem);
      if (!quot.empty()) {
        changed = true;
        auto& lower = byk[k - 1];
        for (Term& q : quot) lower.push_back(std::move(q));
      }
    }
    for (auto& [k, ts] : byk) {
      Exponent e = f - Exponent(k);
      for (Term& t : ts) {
        if (!e.is_zero()) insert_factor(t.mono, Factor{p, e});
        out.push_back(std::move(t));
      }
    }
  }
  terms = std::move(out);
  return changed;
}

Expr reduce_expr(const Expr& e) {
  if (!ExprAccess::data(e).has_negative_power) return e;
  std::vector<Term> terms = e.terms();
  bool any_change = false;
  for (int iter = 0; iter < 8; ++iter) {
    std::set<Atom> bodies;
    for (const Term& t : terms)
      for (const Factor& f : t.mono)
        if (f.atom.is_power() && f.exp < Exponent(0) && !is_const_body(f.atom)) bodies.insert(f.atom);
    bool changed = false;
    for (const Atom& p : bodies) changed = reduce_body(terms, p) || changed;
    if (!changed) break;
    any_change = true;
    combine_terms(terms);
  }
  if (!any_change) return e;
  // reduce_body regroups terms even when nothing divides.
  combine_terms(terms);
  for (const Term& t : terms)
    if (needs_fix(t)) return finish(std::move(terms));
  return ExprAccess::make(std::move(terms));
}

Expr finish(std::vector<Term> terms) {
  std::vector<Term> good;
  std::vector<Expr> fixed;
  good.reserve(terms.size());
  for (Term& t : terms) {
    if (t.coef.is_zero()) continue;
    if (needs_fix(t)) {
      fixed.push_back(fix_term(std::move(t)));
    } else {
      good.push_back(std::move(t));
    }
  }
  combine_terms(good);
  Expr r = reduce_expr(ExprAccess::make(std::move(good)));
  if (fixed.empty()) return r;
  fixed.push_back(r);
  return sum(fixed);
}

// ---- constant powers -------------------------------------------------------

Expr integer_root_power(const mpz_class& n, const Exponent& q) {
  if (n == 1) return Expr(1);
  std::vector<std::pair<mpz_class, long long>> factors;
  mpz_class m = n;
  for (unsigned long p = 2; p < 100000 && mpz_class(p) * p <= m; p += (p == 2 ? 1 : 2)) {
    long long mult = 0;
    while (mpz_divisible_ui_p(m.get_mpz_t(), p) != 0) {
      mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
      ++mult;
    }
    if (mult > 0) factors.emplace_back(mpz_class(p), mult);
  }
  if (m > 1) factors.emplace_back(m, 1);
  Rational coef(1);
  Monomial mono;
  for (auto& [p, a] : factors) {
    Exponent e = q * Exponent(a);
    long long fl = e.floor();
    Rational pr{mpq_class(p)};
    coef *= pr.pow(fl);
    Exponent rest = e - Exponent(fl);
    if (!rest.is_zero()) mono.push_back({make_power_atom(Expr(pr)), rest});
  }
  std::sort(mono.begin(), mono.end(), [](const Factor& a, const Factor& b) { return a.atom < b.atom; });
  std::vector<Term> one;
  one.push_back({std::move(mono), coef});
  return ExprAccess::make(std::move(one));
}

Expr const_power(const Rational& c, const Exponent& q) {
  if (c.is_zero()) {
    if (q > Exponent(0)) return Expr();
    throw SingularSubstitution("0 raised to a non-positive power");
  }
  if (auto r = c.exact_power(q)) return Expr(*r);
  if (c.sign() < 0) {
    if (q.den() % 2 == 0) throw ExprError("negative constant " + c.str() + " under an even root");
    Expr r = const_power(-c, q);
    return q.num() % 2 != 0 ? -r : r;
  }
  mpq_class v = c.to_mpq();
  return integer_root_power(v.get_num(), q) * integer_root_power(v.get_den(), -q);
}

// Positive rational content (gcd of numerators over lcm of denominators).
Rational positive_content(const Expr& e) {
  mpz_class g = 0;
  mpz_class l = 1;
  for (const Term& t : e.terms()) {
    mpq_class q = t.coef.to_mpq();
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), q.get_num_mpz_t());
    mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
  }
  mpz_abs(g.get_mpz_t(), g.get_mpz_t());
  return Rational(mpq_class(g, l));
}

}  // namespace

// ---- basic structure ---------------------------------------------------------

int compare(const Monomial& a, const Monomial& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t k = 0; k < n; ++k)
    if (int c = cmp_factor(a[k], b[k]); c != 0) return c;
  if (a.size() == b.size()) return 0;
  return a.size() < b.size() ? -1 : 1;
}

std::size_t hash_monomial(const Monomial& m) {
  std::size_t h = 0x51ed27;
  for (const Factor& f : m) {
    h = mix_hash(h, f.atom.hash());
    h = mix_hash(h, static_cast<std::size_t>(f.exp.num() * 1000003 + f.exp.den()));
  }
  return h;
}

Exponent exponent_of(const Monomial& m, const Atom& a) {
  std::size_t k = find_factor(m, a);
  return k < m.size() ? m[k].exp : Exponent(0);
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial r;
  r.reserve(a.size() + b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() && j < b.size()) {
    auto c = a[i].atom <=> b[j].atom;
    if (c < 0) {
      r.push_back(a[i++]);
    } else if (c > 0) {
      r.push_back(b[j++]);
    } else {
      Exponent e = a[i].exp + b[j].exp;
      if (!e.is_zero()) r.push_back({a[i].atom, e});
      ++i;
      ++j;
    }
  }
  while (i < a.size()) r.push_back(a[i++]);
  while (j < b.size()) r.push_back(b[j++]);
  return r;
}

void combine_terms(std::vector<Term>& terms) {
  std::sort(terms.begin(), terms.end(), mono_less);
  std::size_t out = 0;
  for (std::size_t i = 0; i < terms.size();) {
    std::size_t j = i + 1;
    Rational c = terms[i].coef;
    while (j < terms.size() && compare(terms[j].mono, terms[i].mono) == 0) c += terms[j++].coef;
    if (!c.is_zero()) {
      if (out != i) terms[out].mono = std::move(terms[i].mono);
      terms[out].coef = c;
      ++out;
    }
    i = j;
  }
  terms.resize(out);
}

Expr ExprAccess::make(std::vector<Term> sorted_terms) {
  if (sorted_terms.empty()) return Expr();
  auto d = std::make_shared<Expr::Data>();
  std::size_t h = 0xabcdef;
  for (const Term& t : sorted_terms) {
    h = mix_hash(h, hash_monomial(t.mono));
    h = mix_hash(h, t.coef.hash());
    if (!d->has_negative_power)
      for (const Factor& f : t.mono)
        if (f.atom.is_power() && f.exp < Exponent(0)) d->has_negative_power = true;
  }
  d->terms = std::move(sorted_terms);
  d->hash = h;
  return Expr(std::shared_ptr<const Expr::Data>(std::move(d)));
}

Expr::Expr() : d_(zero_data()) {}

Expr::Expr(const Rational& c) : d_(zero_data()) {
  if (c.is_zero()) return;
  std::vector<Term> t;
  t.push_back({Monomial{}, c});
  *this = ExprAccess::make(std::move(t));
}

Expr::Expr(const Atom& a) : d_(zero_data()) {
  if (a.is_power()) {
    *this = a.body();
    return;
  }
  std::vector<Term> t;
  t.push_back({Monomial{Factor{a, Exponent(1)}}, Rational(1)});
  *this = ExprAccess::make(std::move(t));
}

Expr Expr::from_terms(std::vector<Term> terms) {
  for (Term& t : terms)
    std::sort(t.mono.begin(), t.mono.end(), [](const Factor& a, const Factor& b) { return a.atom < b.atom; });
  // Merge repeated atoms inside a monomial.
  for (Term& t : terms) {
    Monomial m;
    m.reserve(t.mono.size());
    for (Factor& f : t.mono) {
      if (!m.empty() && m.back().atom == f.atom) {
        m.back().exp = m.back().exp + f.exp;
      } else {
        m.push_back(std::move(f));
      }
    }
    std::erase_if(m, [](const Factor& f) { return f.exp.is_zero(); });
    t.mono = std::move(m);
  }
  return finish(std::move(terms));
}

const std::vector<Term>& Expr::terms() const { return d_->terms; }
std::size_t Expr::hash() const { return d_->hash; }

bool Expr::is_constant() const { return terms().empty() || (terms().size() == 1 && terms()[0].mono.empty()); }

std::optional<Rational> Expr::constant_value() const {
  if (terms().empty()) return Rational(0);
  if (terms().size() == 1 && terms()[0].mono.empty()) return terms()[0].coef;
  return std::nullopt;
}

std::optional<Atom> Expr::as_atom() const {
  if (terms().size() != 1) return std::nullopt;
  const Term& t = terms()[0];
  if (!t.coef.is_one() || t.mono.size() != 1 || !t.mono[0].exp.is_one()) return std::nullopt;
  return t.mono[0].atom;
}

bool Expr::contains(const Atom& a) const {
  return contains_if([&](const Atom& x) { return x == a; });
}

bool Expr::contains_if(const std::function<bool(const Atom&)>& pred) const {
  for (const Term& t : terms())
    for (const Factor& f : t.mono) {
      if (pred(f.atom)) return true;
      if (f.atom.is_power() && f.atom.body().contains_if(pred)) return true;
    }
  return false;
}

std::vector<Atom> Expr::free_atoms() const {
  std::set<Atom> s;
  std::function<void(const Expr&)> walk = [&](const Expr& e) {
    for (const Term& t : e.terms())
      for (const Factor& f : t.mono) {
        if (f.atom.is_power()) {
          walk(f.atom.body());
        } else {
          s.insert(f.atom);
        }
      }
  };
  walk(*this);
  return {s.begin(), s.end()};
}

Expr Expr::operator-() const { return Rational(-1) * *this; }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const auto& x = a.terms();
  const auto& y = b.terms();
  std::vector<Term> r;
  r.reserve(x.size() + y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < x.size() && j < y.size()) {
    int c = compare(x[i].mono, y[j].mono);
    if (c < 0) {
      r.push_back(x[i++]);
    } else if (c > 0) {
      r.push_back(y[j++]);
    } else {
      Rational s = x[i].coef + y[j].coef;
      if (!s.is_zero()) r.push_back({x[i].mono, s});
      ++i;
      ++j;
    }
  }
  while (i < x.size()) r.push_back(x[i++]);
  while (j < y.size()) r.push_back(y[j++]);
  return ExprAccess::make(std::move(r));
}

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Rational& c, const Expr& e) {
  if (c.is_zero() || e.is_zero()) return Expr();
  if (c.is_one()) return e;
  std::vector<Term> r = e.terms();
  for (Term& t : r) t.coef *= c;
  return ExprAccess::make(std::move(r));
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (auto c = a.constant_value()) return *c * b;
  if (auto c = b.constant_value()) return *c * a;
  std::vector<Term> r;
  r.reserve(a.size() * b.size());
  for (const Term& x : a.terms())
    for (const Term& y : b.terms()) r.push_back({mono_mul(x.mono, y.mono), x.coef * y.coef});
  return finish(std::move(r));
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.d_ == b.d_) return true;
  if (a.hash() != b.hash() || a.size() != b.size()) return false;
  return compare(a, b) == 0;
}

int compare(const Expr& a, const Expr& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Term& x = a.terms()[k];
    const Term& y = b.terms()[k];
    if (int c = compare(x.mono, y.mono); c != 0) return c;
    if (auto c = x.coef <=> y.coef; c != 0) return c < 0 ? -1 : 1;
  }
  return 0;
}

Expr sum(const std::vector<Expr>& parts) {
  std::size_t n = 0;
  const Expr* only = nullptr;
  int nonzero = 0;
  for (const Expr& p : parts) {
    n += p.size();
    if (!p.is_zero()) {
      only = &p;
      ++nonzero;
    }
  }
  if (nonzero == 0) return Expr();
  if (nonzero == 1) return *only;
  std::vector<Term> r;
  r.reserve(n);
  for (const Expr& p : parts) r.insert(r.end(), p.terms().begin(), p.terms().end());
  combine_terms(r);
  return ExprAccess::make(std::move(r));
}

// ---- powers ----------------------------------------------------------------

Expr pow(const Expr& base, const Exponent& q) {
  if (q.is_zero()) return Expr(1);
  if (auto c = base.constant_value()) return const_power(*c, q);
  if (q.is_one()) return base;
  if (base.size() == 1) {
    const Term& t = base.terms()[0];
    if (q.is_integer()) {
      Monomial m = t.mono;
      for (Factor& f : m) f.exp = f.exp * q;
      std::vector<Term> one;
      one.push_back({std::move(m), t.coef.pow(q.num())});
      return finish(std::move(one));
    }
    if (t.coef.sign() > 0 && t.mono.size() == 1 && t.mono[0].exp.num() % 2 != 0) {
      std::vector<Term> one;
      one.push_back({Monomial{Factor{t.mono[0].atom, t.mono[0].exp * q}}, Rational(1)});
      return const_power(t.coef, q) * finish(std::move(one));
    }
  }
  if (q.is_integer() && q.num() > 0) return int_pow(base, q.num());
  Rational content = positive_content(base);
  if (q.is_integer() && base.terms().front().coef.sign() < 0) content = -content;
  Expr body = content.inverse() * base;
  Atom p = make_power_atom(body);
  std::vector<Term> one;
  one.push_back({Monomial{Factor{p, q}}, Rational(1)});
  return const_power(content, q) * finish(std::move(one));
}

// ---- derivations -----------------------------------------------------------

Expr apply_derivation(const Expr& e, const AtomDerivative& d, PowerCache* cache) {
  PowerCache local;
  if (cache == nullptr) cache = &local;
  std::vector<Term> out;
  for (const Term& t : e.terms()) {
    for (std::size_t k = 0; k < t.mono.size(); ++k) {
      const Factor& f = t.mono[k];
      Expr da;
      if (f.atom.is_power()) {
        auto it = cache->find(f.atom);
        if (it == cache->end()) it = cache->emplace(f.atom, apply_derivation(f.atom.body(), d, cache)).first;
        da = it->second;
      } else {
        da = d(f.atom);
      }
      if (da.is_zero()) continue;
      Monomial rest = t.mono;
      Exponent e1 = f.exp - Exponent(1);
      if (e1.is_zero()) {
        rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(k));
      } else {
        rest[k].exp = e1;
      }
      Rational c = t.coef * f.exp.to_rational();
      for (const Term& u : da.terms()) out.push_back({mono_mul(rest, u.mono), c * u.coef});
    }
  }
  return finish(std::move(out));
}

Expr partial_derivative(const Expr& e, const Atom& a) {
  if (a.is_power()) throw ExprError("cannot differentiate with respect to a power of a sum");
  return apply_derivation(e, [&](const Atom& x) { return x == a ? Expr(1) : Expr(); });
}

// ---- substitution ------------------------------------------------------------

Expr substitute(const Expr& e, const Bindings& bindings) {
  if (bindings.empty()) return e;
  std::unordered_map<Atom, Expr> body_cache;
  std::function<Expr(const Expr&)> sub = [&](const Expr& x) -> Expr {
    std::vector<Expr> parts;
    std::vector<Term> untouched;
    for (const Term& t : x.terms()) {
      Monomial kept;
      std::vector<Expr> factors;
      for (const Factor& f : t.mono) {
        if (f.atom.is_power()) {
          auto it = body_cache.find(f.atom);
          if (it == body_cache.end()) it = body_cache.emplace(f.atom, sub(f.atom.body())).first;
          if (it->second == f.atom.body()) {
            kept.push_back(f);
          } else {
            try {
              factors.push_back(pow(it->second, f.exp));
            } catch (const SingularSubstitution&) {
              throw SingularSubstitution("substitution makes a power body vanish under exponent " + f.exp.str());
            }
          }
          continue;
        }
        auto it = bindings.find(f.atom);
        if (it == bindings.end()) {
          kept.push_back(f);
        } else {
          try {
            factors.push_back(pow(it->second, f.exp));
          } catch (const SingularSubstitution&) {
            throw SingularSubstitution("substitution of 0 into a negative power");
          }
        }
      }
      if (factors.empty()) {
        untouched.push_back(t);
        continue;
      }
      std::vector<Term> one;
      one.push_back({std::move(kept), t.coef});
      Expr p = ExprAccess::make(std::move(one));
      for (const Expr& f : factors) p = p * f;
      parts.push_back(std::move(p));
    }
    if (!untouched.empty()) parts.push_back(ExprAccess::make(std::move(untouched)));
    return sum(parts);
  };
  return sub(e);
}

bool is_zero_symbolic(const Expr& e) { return e.is_zero(); }

// ---- rewriting modulo relations --------------------------------------------

Expr reduce_modulo(const Expr& e, const std::vector<Expr>& relations) {
  std::vector<Divisor> divs;
  for (const Expr& r : relations)
    if (!r.is_zero()) divs.push_back(make_divisor(r, true));
  if (divs.empty()) return e;
  std::vector<Expr> rem;
  Expr p = e;
  long steps = 0;
  while (!p.is_zero()) {
    if (++steps > kDivisionCap) throw ExprError("rule rewriting did not terminate");
    bool reduced = false;
    for (const Divisor& d : divs) {
      // Leading term of p in this divisor's variable order.
      std::size_t best = 0;
      std::vector<Exponent> best_key = lex_key(p.terms()[0].mono, d.vars);
      for (std::size_t i = 1; i < p.size(); ++i) {
        auto k = lex_key(p.terms()[i].mono, d.vars);
        if (k > best_key) {
          best_key = std::move(k);
          best = i;
        }
      }
      if (auto q = try_divide(p.terms()[best], d)) {
        std::vector<Term> lead;
        lead.push_back(d.lead);
        Expr rel = ExprAccess::make(std::move(lead));
        for (const Term& t : d.tail) rel = rel + Expr::from_terms({t});
        p = p - Expr::from_terms({*q}) * rel;
        reduced = true;
        break;
      }
    }
    if (reduced) continue;
    // No divisor applies to any leading term: move the first term to the remainder.
    const Term& t = p.terms()[0];
    Expr lt = Expr::from_terms({t});
    rem.push_back(lt);
    p = p - lt;
  }
  return sum(rem);
}

std::vector<std::pair<Monomial, Expr>> split_terms(const Expr& e, const std::function<bool(const Atom&)>& pred) {
  std::map<Monomial, std::vector<Term>, bool (*)(const Monomial&, const Monomial&)> groups(
      [](const Monomial& a, const Monomial& b) { return compare(a, b) < 0; });
  for (const Term& t : e.terms()) {
    Monomial sel;
    Monomial rest;
    for (const Factor& f : t.mono) (pred(f.atom) ? sel : rest).push_back(f);
    groups[sel].push_back({std::move(rest), t.coef});
  }
  std::vector<std::pair<Monomial, Expr>> out;
  for (auto& [m, ts] : groups) out.emplace_back(m, Expr::from_terms(std::move(ts)));
  return out;
}

Expr monomial_expr(const Monomial& m) { return Expr::from_terms({Term{m, Rational(1)}}); }

// ---- raw trees ---------------------------------------------------------------

Raw Raw::num(Rational r) {
  Raw x;
  x.kind = Kind::Number;
  x.number = std::move(r);
  return x;
}

Raw Raw::flt(double v) {
  Raw x;
  x.kind = Kind::Float;
  x.float_value = v;
  return x;
}

Raw Raw::sym(vartool::Atom a) {
  Raw x;
  x.kind = Kind::Atom;
  x.atom = std::move(a);
  return x;
}

Raw Raw::add(std::vector<Raw> parts) {
  Raw x;
  x.kind = Kind::Sum;
  x.args = std::move(parts);
  return x;
}

Raw Raw::mul(std::vector<Raw> parts) {
  Raw x;
  x.kind = Kind::Product;
  x.args = std::move(parts);
  return x;
}

Raw Raw::power(Raw base, Exponent q) {
  Raw x;
  x.kind = Kind::Power;
  x.args.push_back(std::move(base));
  x.exponent = q;
  return x;
}

Expr normalize(const Raw& raw) {
  switch (raw.kind) {
    case Raw::Kind::Number:
      return Expr(raw.number);
    case Raw::Kind::Float:
      throw ExprError("non-rational numeric literal " + std::to_string(raw.float_value));
    case Raw::Kind::Atom:
      if (raw.atom->is_power()) throw ExprError("power atoms cannot appear in a raw tree");
      return Expr(*raw.atom);
    case Raw::Kind::Sum: {
      std::vector<Expr> parts;
      for (const Raw& r : raw.args) parts.push_back(normalize(r));
      return sum(parts);
    }
    case Raw::Kind::Product: {
      Expr p(1);
      for (const Raw& r : raw.args) p = p * normalize(r);
      return p;
    }
    case Raw::Kind::Power:
      return pow(normalize(raw.args.at(0)), raw.exponent);
  }
  return Expr();
}

}  // namespace vartool
