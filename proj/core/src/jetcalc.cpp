#include "vartool/jetcalc.hpp"

#include <algorithm>
#include <set>

#include "vartool/error.hpp"

namespace vartool {

int Lagrangian::order() const {
  int r = 0;
  for (const Atom& a : jet_atoms(density)) r = std::max(r, a.order());
  return r;
}

std::vector<Atom> jet_atoms(const Expr& e) {
  std::vector<Atom> out = e.free_atoms();
  std::erase_if(out, [](const Atom& a) { return !a.is_jet(); });
  return out;
}

Expr total_derivative(const ModelSpec& m, const Expr& e, int i) {
  if (i < 0 || i >= m.dim()) throw ModelError("total derivative index out of range");
  const int cap = m.jet_cap();
  return apply_derivation(e, [&](const Atom& a) -> Expr {
    switch (a.kind()) {
      case AtomKind::Base:
        return a.index() == i ? Expr(1) : Expr();
      case AtomKind::Jet:
        if (a.order() + 1 > cap)
          throw JetOrderError("d_" + std::to_string(i) + " of " + Expr(a).str() + " exceeds the jet-order cap " +
                              std::to_string(cap));
        return Expr(a.promoted(i));
      default:
        return Expr();
    }
  });
}

Expr total_derivative(const ModelSpec& m, const Expr& e, const std::vector<int>& multi) {
  Expr r = e;
  for (int i : multi) r = total_derivative(m, r, i);
  return r;
}

VectorField generic_lift(const ModelSpec& m) {
  const int n = m.dim();
  VectorField v = VectorField::zero(n);
  for (int i = 0; i < n; ++i) v.xi[static_cast<std::size_t>(i)] = Expr(m.xi(i));
  for (FieldId f = 0; f < static_cast<FieldId>(m.bundles().size()); ++f) {
    if (m.is_external(f)) continue;
    for (const Atom& y : m.component_atoms(f)) {
      std::vector<Expr> parts;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Expr c = lift_coefficient(m, y, i, j);
          if (!c.is_zero()) parts.push_back(c * Expr(m.xi(i, {j})));
        }
      Expr x = sum(parts);
      if (!x.is_zero()) v.vertical.emplace(y, x);
    }
  }
  return v;
}

// ---- prolongation ---------------------------------------------------------------

Prolongation::Prolongation(const ModelSpec& m, VectorField v) : m_(m), v_(std::move(v)) {
  v_.xi.resize(static_cast<std::size_t>(m.dim()));
}

Expr Prolongation::component(const Atom& jet) const {
  if (jet.order() == 0) {
    auto it = v_.vertical.find(jet);
    return it == v_.vertical.end() ? Expr() : it->second;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (auto it = memo_.find(jet); it != memo_.end()) return it->second;
  }
  std::vector<int> d = jet.derivs();
  const int i = d.back();
  d.pop_back();
  const Atom parent = Atom::jet(jet.field(), jet.comps(), d);
  Expr r = total_derivative(m_, component(parent), i);
  for (int j = 0; j < m_.dim(); ++j) {
    Expr dxi = total_derivative(m_, v_.xi[static_cast<std::size_t>(j)], i);
    if (!dxi.is_zero()) r -= Expr(parent.promoted(j)) * dxi;
  }
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(jet, r);
  return r;
}

Expr Prolongation::vertical_part(const Atom& jet) const {
  Expr r = component(jet);
  for (int k = 0; k < m_.dim(); ++k) {
    const Expr& x = v_.xi[static_cast<std::size_t>(k)];
    if (!x.is_zero()) r -= Expr(jet.promoted(k)) * x;
  }
  return r;
}

Expr Prolongation::divergence() const {
  std::vector<Expr> parts;
  for (int i = 0; i < m_.dim(); ++i) parts.push_back(total_derivative(m_, v_.xi[static_cast<std::size_t>(i)], i));
  return sum(parts);
}

// ---- Lie derivative and Euler-Lagrange ---------------------------------------------

Expr lie_derivative_lagrangian(const Lagrangian& l, const Prolongation& v) {
  const ModelSpec& m = *l.model;
  Expr r = apply_derivation(l.density, [&](const Atom& a) -> Expr {
    if (a.is_base()) return v.field().xi[static_cast<std::size_t>(a.index())];
    if (a.is_jet() && a.field() != m.xi_field()) return v.component(a);
    return Expr();
  });
  return r + l.density * v.divergence();
}

Expr lie_derivative_lagrangian(const Lagrangian& l, const VectorField& v) {
  return lie_derivative_lagrangian(l, Prolongation(*l.model, v));
}

namespace {

using Multi = std::vector<int>;

// Q_I = P_I - sum_{k >= last(I)} d_k Q_{I+k}, so that Q_{} is the
// Euler-Lagrange expression with each multiset visited once.
Expr horner(const ModelSpec& m, const std::map<Multi, Expr>& partials, const std::set<Multi>& prefixes, Multi& cur) {
  Expr q;
  if (auto it = partials.find(cur); it != partials.end()) q = it->second;
  const int start = cur.empty() ? 0 : cur.back();
  for (int k = start; k < m.dim(); ++k) {
    cur.push_back(k);
    if (prefixes.count(cur) != 0U) {
      Expr child = horner(m, partials, prefixes, cur);
      if (!child.is_zero()) q -= total_derivative(m, child, k);
    }
    cur.pop_back();
  }
  return q;
}

bool same_component(const Atom& a, const Atom& y) {
  return a.is_jet() && a.field() == y.field() && a.rank() == y.rank() && a.comps() == y.comps();
}

}  // namespace

Expr euler_lagrange(const Lagrangian& l, const Atom& y) {
  if (!y.is_jet() || y.order() != 0) throw ModelError("Euler-Lagrange expression needs an order-zero jet atom");
  const ModelSpec& m = *l.model;
  std::map<Multi, Expr> partials;
  std::set<Multi> prefixes;
  for (const Atom& a : jet_atoms(l.density)) {
    if (!same_component(a, y)) continue;
    Multi d = a.derivs();
    partials.emplace(d, partial_derivative(l.density, a));
    while (!d.empty()) {
      prefixes.insert(d);
      d.pop_back();
    }
  }
  Multi cur;
  return horner(m, partials, prefixes, cur);
}

std::vector<std::pair<Atom, Expr>> euler_lagrange(const Lagrangian& l, FieldId f) {
  const ModelSpec& m = *l.model;
  if (f < 0 || f >= static_cast<FieldId>(m.bundles().size())) throw ModelError("unknown field id");
  if (m.is_external(f)) throw ModelError("external symbol '" + m.bundle(f).name + "' has no Euler-Lagrange expression");
  std::vector<std::pair<Atom, Expr>> out;
  for (const Atom& y : m.component_atoms(f)) out.emplace_back(y, euler_lagrange(l, y));
  return out;
}

// ---- Poincaré-Cartan form and Noether current -----------------------------------------

namespace {

std::vector<Atom> order_zero_components(const Lagrangian& l) {
  std::set<Atom> ys;
  for (const Atom& a : jet_atoms(l.density))
    if (a.field() != l.model->xi_field()) ys.insert(a.underived());
  return {ys.begin(), ys.end()};
}

}  // namespace

PoincareCartan poincare_cartan(const Lagrangian& l) {
  if (l.order() > 2) throw UnsupportedOrder("Poincaré-Cartan form is implemented for orders up to 2");
  const ModelSpec& m = *l.model;
  const int n = m.dim();
  PoincareCartan pc;
  pc.horizontal = l.density;
  for (const Atom& y : order_zero_components(l)) {
    // P^{ji} = w d𝓛/dy_{ji}, w = 1/2 off the diagonal of the symmetric pair.
    std::vector<std::vector<Expr>> p2(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
    bool any2 = false;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Expr d = partial_derivative(l.density, y.promoted(j).promoted(i));
        if (d.is_zero()) continue;
        p2[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = i == j ? d : d / 2;
        any2 = true;
      }
    std::vector<Expr> p1(static_cast<std::size_t>(n));
    bool any1 = false;
    for (int i = 0; i < n; ++i) {
      Expr c = partial_derivative(l.density, y.promoted(i));
      for (int p = 0; p < n; ++p) {
        const Expr& x = p2[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)];
        if (!x.is_zero()) c -= total_derivative(m, x, p);
      }
      any1 = any1 || !c.is_zero();
      p1[static_cast<std::size_t>(i)] = std::move(c);
    }
    if (any1) pc.contact.emplace(y, std::move(p1));
    if (any2)
      for (int j = 0; j < n; ++j)
        if (std::any_of(p2[static_cast<std::size_t>(j)].begin(), p2[static_cast<std::size_t>(j)].end(),
                        [](const Expr& e) { return !e.is_zero(); }))
          pc.contact.emplace(y.promoted(j), std::move(p2[static_cast<std::size_t>(j)]));
  }
  return pc;
}

std::vector<Expr> noether_current(const Lagrangian& l, const Prolongation& v) {
  const ModelSpec& m = *l.model;
  const int n = m.dim();
  PoincareCartan pc = poincare_cartan(l);
  std::vector<std::vector<Expr>> parts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) parts[static_cast<std::size_t>(i)].push_back(l.density * v.field().xi[static_cast<std::size_t>(i)]);
  for (const auto& [yj, coeffs] : pc.contact) {
    Expr vp = v.vertical_part(yj);
    if (vp.is_zero()) continue;
    for (int i = 0; i < n; ++i) {
      const Expr& c = coeffs[static_cast<std::size_t>(i)];
      if (!c.is_zero()) parts[static_cast<std::size_t>(i)].push_back(c * vp);
    }
  }
  std::vector<Expr> j(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) j[static_cast<std::size_t>(i)] = -sum(parts[static_cast<std::size_t>(i)]);
  return j;
}

std::vector<Expr> noether_current(const Lagrangian& l, const VectorField& v) {
  return noether_current(l, Prolongation(*l.model, v));
}

Expr first_variation_residual(const Lagrangian& l, const VectorField& v) {
  const ModelSpec& m = *l.model;
  Prolongation pv(m, v);
  std::vector<Expr> parts;
  parts.push_back(lie_derivative_lagrangian(l, pv));
  for (const Atom& y : order_zero_components(l)) {
    Expr vp = pv.vertical_part(y);
    if (vp.is_zero()) continue;
    parts.push_back(-(vp * euler_lagrange(l, y)));
  }
  std::vector<Expr> j = noether_current(l, pv);
  for (int i = 0; i < m.dim(); ++i) parts.push_back(total_derivative(m, j[static_cast<std::size_t>(i)], i));
  return sum(parts);
}

CovarianceReport check_covariance(const Lagrangian& l) {
  const ModelSpec& m = *l.model;
  Expr lie = lie_derivative_lagrangian(l, generic_lift(m));
  CovarianceReport r;
  for (auto& [mono, coef] : split_terms(lie, [&](const Atom& a) { return m.is_xi(a); })) {
    if (coef.is_zero()) continue;
    r.covariant = false;
    r.failing.emplace_back(mono, coef);
  }
  return r;
}

}  // namespace vartool
