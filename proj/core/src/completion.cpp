#include "vartool/completion.hpp"

#include <unordered_map>

#include "vartool/error.hpp"

namespace vartool {

Rational ScalingLaw::weight(const ModelSpec& m, const Atom& a) const {
  if (a.is_jet()) {
    auto it = fields.find(a.field());
    return it == fields.end() ? Rational(0) : it->second;
  }
  if (a.is_external()) {
    if (auto it = externals.find(a.name()); it != externals.end()) return it->second;
    if (auto f = m.find(a.name()))
      if (auto it = fields.find(*f); it != fields.end()) return it->second;
  }
  return 0;
}

ScalingLaw ScalingLaw::fiber(const std::vector<FieldId>& over) {
  ScalingLaw l;
  for (FieldId f : over) l.fields[f] = 1;
  return l;
}

ScalingLaw ScalingLaw::metric(const ModelSpec& m) {
  ScalingLaw l;
  if (auto g = m.metric()) l.fields[*g] = -1;
  for (const BundleSpec& b : m.bundles())
    if (b.external && b.weight) l.externals[b.name] = *b.weight;
  return l;
}

Atom homothety_parameter() { return Atom::external("t"); }

namespace {

class Scaler {
 public:
  Scaler(const ModelSpec& m, const ScalingLaw& law) : m_(m), law_(law), t_(homothety_parameter()) {}

  Expr run(const Expr& e) {
    std::vector<Expr> parts;
    for (const Term& term : e.terms()) {
      Rational tw = 0;
      Monomial kept;
      Expr mixed(1);
      for (const Factor& f : term.mono) {
        if (f.atom.is_power()) {
          const Body& b = body(f.atom);
          if (b.degree) {
            tw += *b.degree * f.exp.to_rational();
            kept.push_back(f);
          } else {
            mixed *= pow(b.scaled, f.exp);
          }
          continue;
        }
        if (f.atom == t_) throw ModelError("expression already contains the homotopy parameter t");
        tw += law_.weight(m_, f.atom) * f.exp.to_rational();
        kept.push_back(f);
      }
      Expr x = Expr::from_terms({Term{kept, term.coef}});
      if (!tw.is_zero()) x *= pow(Expr(t_), Exponent(tw));
      parts.push_back(mixed.is_constant() ? x : x * mixed);
    }
    return sum(parts);
  }

  std::optional<Rational> degree(const Expr& s) const {
    std::optional<Rational> d;
    for (const Term& term : s.terms()) {
      for (const Factor& f : term.mono)
        if (f.atom.is_power() && f.atom.body().contains(t_)) return std::nullopt;
      Rational w = exponent_of(term.mono, t_).to_rational();
      if (d && !(*d == w)) return std::nullopt;
      d = w;
    }
    return d ? d : std::optional<Rational>(Rational(0));
  }

 private:
  struct Body {
    Expr scaled;
    std::optional<Rational> degree;
  };

  const Body& body(const Atom& p) {
    auto it = bodies_.find(p);
    if (it != bodies_.end()) return it->second;
    Expr s = run(p.body());
    auto d = degree(s);
    return bodies_.emplace(p, Body{s, d}).first->second;
  }

  const ModelSpec& m_;
  const ScalingLaw& law_;
  Atom t_;
  std::unordered_map<Atom, Body> bodies_;
};

void check_source(const SourceSpec& s) {
  if (!s.model) throw ModelError("source form without a model");
  const ModelSpec& m = *s.model;
  for (const auto& [a, e] : s.eps) {
    auto f = m.field_of(a);
    if (!a.is_jet() || a.order() != 0 || !f || std::find(s.over.begin(), s.over.end(), *f) == s.over.end())
      throw ModelError("source entry " + Expr(a).str() + " is not an order-zero component of the declared fields");
  }
  if (s.covariant && !m.metric()) throw ModelError("covariant pairing needs a metric");
}

bool is_metric(const ModelSpec& m, FieldId f) { return m.metric() && *m.metric() == f; }

}  // namespace

Homothetic homothety_scale(const ModelSpec& m, const Expr& e, const ScalingLaw& law) {
  Scaler sc(m, law);
  Homothetic h;
  h.scaled = sc.run(e);
  h.degree = sc.degree(h.scaled);
  return h;
}

Lagrangian vainberg_tonti(const SourceSpec& s, const std::optional<ScalingLaw>& law, const std::vector<Expr>& rules) {
  check_source(s);
  const ModelSpec& m = *s.model;
  const ScalingLaw l = law ? *law : ScalingLaw::fiber(s.over);
  const Atom t = homothety_parameter();
  Scaler sc(m, l);
  std::vector<Expr> integrand;
  for (const auto& [y, e] : s.eps) {
    if (e.is_zero()) continue;
    const FieldId f = y.field();
    const int mult = m.multiplicity(f, y.comps());
    Rational w = l.weight(m, y);
    Expr pairing(y);
    if (is_metric(m, f) && s.covariant) {
      w = -w;
      pairing = m.metric_lowered(y.comp(0), y.comp(1));
    }
    if (w.is_zero()) continue;
    Expr factor = Rational(mult) * w * pairing;
    if (!(w == Rational(1))) factor *= pow(Expr(t), Exponent(w - Rational(1)));
    integrand.push_back(factor * sc.run(e));
  }
  Expr total = sum(integrand);
  if (!rules.empty()) total = reduce_modulo(total, rules);
  std::vector<Expr> out;
  for (auto& [mono, coef] : split_terms(total, [&](const Atom& a) { return a == t; })) {
    if (coef.is_zero()) continue;
    if (coef.contains(t))
      throw NonIntegrableHomotopy("integrand is not a finite sum of powers of t: " + coef.str());
    Rational w = exponent_of(mono, t).to_rational();
    if (w <= Rational(-1))
      throw NonIntegrableHomotopy("t^" + w.str() + " is not integrable on [0, 1] in the term " +
                                  (monomial_expr(mono) * coef).str());
    out.push_back(coef / (w + Rational(1)));
  }
  return Lagrangian{s.model, sum(out)};
}

std::map<Atom, Expr> source_entries(const Lagrangian& l, const std::vector<FieldId>& over, bool covariant,
                                    const VariationTable& variations) {
  const ModelSpec& m = *l.model;
  std::map<Atom, Expr> out;
  std::map<Atom, Expr> metric;
  for (FieldId f : over) {
    if (m.is_external(f)) throw ModelError("external symbol '" + m.bundle(f).name + "' has no source entries");
    for (const Atom& y : m.component_atoms(f)) {
      Expr e = euler_lagrange(l, y, variations);
      if (is_metric(m, f)) {
        e = e / m.multiplicity(f, y.comps());
        if (covariant) {
          metric.emplace(y, e);
          continue;
        }
      }
      out.emplace(y, e);
    }
  }
  if (!metric.empty()) {
    const FieldId g = *m.metric();
    const int n = m.dim();
    auto hat = [&](int i, int j) { return metric.at(m.atom(g, {std::min(i, j), std::max(i, j)})); };
    for (const auto& [y, unused] : metric) {
      const int a = y.comp(0);
      const int b = y.comp(1);
      std::vector<Expr> parts;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) parts.push_back(m.metric_upper(a, i) * m.metric_upper(b, j) * hat(i, j));
      out.emplace(y, -sum(parts));
    }
  }
  return out;
}

CompletionResult canonical_completion(const SourceSpec& s, const std::optional<ScalingLaw>& law,
                                      const std::vector<Expr>& rules, const VariationTable& variations) {
  CompletionResult r{vainberg_tonti(s, law, rules), {}};
  std::map<Atom, Expr> e = source_entries(r.vt_lagrangian, s.over, s.covariant, variations);
  for (auto& [y, x] : e) {
    auto it = s.eps.find(y);
    Expr k = it == s.eps.end() ? x : x - it->second;
    if (!rules.empty()) k = reduce_modulo(k, rules);
    r.kappa.emplace(y, k);
  }
  return r;
}

}  // namespace vartool
