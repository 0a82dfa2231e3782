#include "vartool/numcheck.hpp"

#include <cmath>
#include <random>
#include <unordered_map>

#include "vartool/error.hpp"

namespace vartool {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// k/64 with k uniform in [lo*64, hi*64].
Rational grid(std::uint64_t h, int lo64, int hi64) {
  auto span = static_cast<std::uint64_t>(hi64 - lo64 + 1);
  return Rational(lo64 + static_cast<long long>(h % span), 64);
}

bool is_positive_external(const ModelSpec* m, const Atom& a) {
  if (m == nullptr) return false;
  auto f = m->find(a.name());
  return f && m->bundle(*f).positive;
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t seed, int k) { return splitmix(seed ^ splitmix(static_cast<std::uint64_t>(k) + 1)); }

Rational PointAssignment::value(const Atom& a) const {
  if (auto it = values_.find(a); it != values_.end()) return it->second;
  std::uint64_t h = splitmix(seed_ ^ a.hash());
  switch (a.kind()) {
    case AtomKind::Base:
      return grid(h, 32, 96);
    case AtomKind::Jet:
      return grid(h, -32, 32);
    case AtomKind::External:
      return is_positive_external(model_, a) ? grid(h, 32, 96) : grid(h, -64, 64);
    case AtomKind::Power:
      break;
  }
  throw DomainError("power atoms are evaluated from their bodies");
}

namespace {

void multisets(int n, int len, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == len) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    multisets(n, len, i, cur, out);
    cur.pop_back();
  }
}

double det_double(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double d = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[p][c])) p = r;
    if (a[p][c] == 0.0) return 0.0;
    if (p != c) {
      std::swap(a[p], a[c]);
      d = -d;
    }
    d *= a[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  return d;
}

}  // namespace

PointAssignment random_point(const ModelSpec& m, int max_jet_order, std::uint64_t seed) {
  PointAssignment p(seed, &m);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> off(-64, 64);
  std::uniform_int_distribution<int> jet(-32, 32);
  const int n = m.dim();
  if (auto g = m.metric()) {
    const auto& sig = m.manifold().signature;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      std::vector<std::vector<Rational>> v(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
      std::vector<std::vector<double>> d(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          Rational x = Rational(off(rng), 64);
          if (i == j) x += Rational(sig[static_cast<std::size_t>(i)]);
          v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x;
          v[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x;
          d[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = x.to_double();
          d[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = x.to_double();
        }
      bool diag = true;
      for (int i = 0; i < n; ++i)
        if (v[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)].sign() != sig[static_cast<std::size_t>(i)]) diag = false;
      double det = det_double(d);
      if (!diag || std::fabs(det) < 0.1 || (det > 0 ? 1 : -1) != m.signature_sign()) continue;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) p.set(m.atom(*g, {i, j}), v[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      ok = true;
    }
    if (!ok) throw DomainError("no admissible metric sample after 100 draws");
  }
  for (FieldId f = 0; f < static_cast<FieldId>(m.bundles().size()); ++f) {
    if (m.is_external(f)) continue;
    for (int order = 0; order <= max_jet_order; ++order) {
      if (order == 0 && m.metric() && f == *m.metric()) continue;
      std::vector<std::vector<int>> ds;
      std::vector<int> cur;
      multisets(n, order, 0, cur, ds);
      for (const auto& c : m.components(f))
        for (const auto& d : ds) p.set(m.atom(f, c, d), Rational(jet(rng), 64));
    }
  }
  return p;
}

namespace {

struct Value {
  double approx = 0.0;
  bool exact = false;
  mpq_class q;
};

class Evaluator {
 public:
  explicit Evaluator(const PointAssignment& p) : p_(p) {}

  Value expr(const Expr& e, double* scale) {
    mpq_class exact_sum = 0;
    double approx_sum = 0.0;
    bool all_exact = true;
    for (const Term& t : e.terms()) {
      mpq_class q = t.coef.to_mpq();
      double f = 1.0;
      bool exact = true;
      for (const Factor& x : t.mono) {
        if (x.atom.is_power()) {
          Value v = power(x.atom, x.exp);
          if (v.exact) {
            q *= v.q;
          } else {
            f *= v.approx;
            exact = false;
          }
        } else {
          mpq_class a = atom(x.atom);
          if (x.exp.is_integer()) {
            q *= int_pow(a, x.exp.num(), x.atom);
          } else {
            f *= real_pow(a.get_d(), x.exp, x.atom);
            exact = false;
          }
        }
      }
      double term = q.get_d() * f;
      if (scale != nullptr) *scale = std::max(*scale, std::fabs(term));
      if (exact) {
        exact_sum += q;
      } else {
        approx_sum += term;
        all_exact = false;
      }
    }
    Value v;
    if (all_exact) {
      v.exact = true;
      v.q = exact_sum;
      v.approx = exact_sum.get_d();
    } else {
      v.approx = exact_sum.get_d() + approx_sum;
    }
    return v;
  }

 private:
  mpq_class atom(const Atom& a) {
    auto it = atoms_.find(a);
    if (it != atoms_.end()) return it->second;
    mpq_class v = p_.value(a).to_mpq();
    atoms_.emplace(a, v);
    return v;
  }

  static mpq_class int_pow(const mpq_class& a, long long k, const Atom& at) {
    if (k < 0 && a == 0) throw DomainError("0 to a negative power at " + Expr(at).str());
    mpz_class num = a.get_num();
    mpz_class den = a.get_den();
    unsigned long e = static_cast<unsigned long>(k < 0 ? -k : k);
    mpz_class rn;
    mpz_class rd;
    mpz_pow_ui(rn.get_mpz_t(), num.get_mpz_t(), e);
    mpz_pow_ui(rd.get_mpz_t(), den.get_mpz_t(), e);
    mpq_class r = k < 0 ? mpq_class(rd, rn) : mpq_class(rn, rd);
    r.canonicalize();
    return r;
  }

  static double real_pow(double base, const Exponent& q, const Atom& at) {
    if (base < 0.0 && q.den() % 2 == 0)
      throw DomainError("negative base under a fractional power at " + (at.is_power() ? "(" + at.body().str() + ")" : Expr(at).str()));
    if (base == 0.0 && q < Exponent(0)) throw DomainError("0 to a negative power");
    if (base < 0.0) {
      double r = std::pow(-base, q.to_double());
      return q.num() % 2 != 0 ? -r : r;
    }
    return std::pow(base, q.to_double());
  }

  Value power(const Atom& a, const Exponent& q) {
    auto it = bodies_.find(a);
    if (it == bodies_.end()) it = bodies_.emplace(a, expr(a.body(), nullptr)).first;
    const Value& b = it->second;
    Value v;
    if (q.is_integer() && b.exact) {
      v.exact = true;
      v.q = int_pow(b.q, q.num(), a);
      v.approx = v.q.get_d();
    } else {
      v.approx = real_pow(b.approx, q, a);
    }
    return v;
  }

  const PointAssignment& p_;
  std::unordered_map<Atom, mpq_class> atoms_;
  std::unordered_map<Atom, Value> bodies_;
};

}  // namespace

EvalResult eval_detail(const Expr& e, const PointAssignment& p) {
  Evaluator ev(p);
  EvalResult r;
  r.value = ev.expr(e, &r.scale).approx;
  return r;
}

double eval(const Expr& e, const PointAssignment& p) { return eval_detail(e, p).value; }

ZeroReport is_zero_numeric(const std::vector<Expr>& es, const ModelSpec& m, int trials, double tol, std::uint64_t seed) {
  ZeroReport r;
  for (int k = 0; k < trials; ++k) {
    std::uint64_t s = trial_seed(seed, k);
    ++r.trials;
    try {
      PointAssignment p = random_point(m, 0, s);
      for (const Expr& e : es) {
        EvalResult v = eval_detail(e, p);
        double bound = tol * (1.0 + v.scale);
        double rel = std::fabs(v.value) / (1.0 + v.scale);
        if (std::fabs(v.value) > r.max_abs) r.max_abs = std::fabs(v.value);
        if (rel > r.max_rel) r.max_rel = rel;
        if (!(std::fabs(v.value) < bound) && r.zero) {
          r.zero = false;
          r.witness_seed = s;
          r.witness_value = v.value;
        }
      }
    } catch (const DomainError& err) {
      ++r.skipped;
      r.log.push_back("trial " + std::to_string(k) + " skipped: " + err.what());
    }
  }
  if (r.skipped * 2 > r.trials) {
    r.inconclusive = true;
    r.zero = false;
  }
  return r;
}

ZeroReport is_zero_numeric(const Expr& e, const ModelSpec& m, int trials, double tol, std::uint64_t seed) {
  return is_zero_numeric(std::vector<Expr>{e}, m, trials, tol, seed);
}

}  // namespace vartool
