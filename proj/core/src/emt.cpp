#include "vartool/emt.hpp"

#include "vartool/error.hpp"

namespace vartool {

Expr LiftCoeffs::first(const Atom& a, int i, int j) const {
  auto it = c1.find({a, i, j});
  return it == c1.end() ? Expr() : it->second;
}

LiftCoeffs canonical_lift(const ModelSpec& m) {
  LiftCoeffs lc;
  const int n = m.dim();
  for (FieldId f = 0; f < static_cast<FieldId>(m.bundles().size()); ++f) {
    if (m.is_external(f)) continue;
    for (const Atom& y : m.component_atoms(f))
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Expr c = lift_coefficient(m, y, i, j);
          if (!c.is_zero()) lc.c1.emplace(std::tuple{y, i, j}, std::move(c));
        }
  }
  return lc;
}

Expr euler_lagrange(const Lagrangian& l, const Atom& y, const VariationTable& rules) {
  Expr e = euler_lagrange(l, y);
  for (const auto& [sym, table] : rules) {
    auto it = table.find(y);
    if (it == table.end()) continue;
    Expr d = partial_derivative(l.density, sym);
    if (!d.is_zero()) e += d * it->second;
  }
  return e;
}

Expr SourceForm::symmetric(const ModelSpec& m, const Atom& a) const {
  auto it = tau.find(a);
  if (it == tau.end()) return Expr();
  int mult = m.multiplicity(a.field(), a.comps());
  return mult == 1 ? it->second : it->second / mult;
}

SourceForm em_source_form(const Lagrangian& lm, const VariationTable& rules) {
  const ModelSpec& m = *lm.model;
  SourceForm s;
  for (FieldId f = 0; f < static_cast<FieldId>(m.bundles().size()); ++f) {
    if (!m.is_background(f) || m.is_external(f)) continue;
    for (const Atom& y : m.component_atoms(f)) s.tau.emplace(y, euler_lagrange(lm, y, rules));
  }
  return s;
}

EMTensor em_tensor(const ModelSpec& m, const SourceForm& tau) {
  const int n = m.dim();
  EMTensor t;
  t.t.assign(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::vector<Expr> parts;
      for (const auto& [a, e] : tau.tau) {
        if (e.is_zero()) continue;
        Expr c = lift_coefficient(m, a, i, j);
        if (!c.is_zero()) parts.push_back(c * e);
      }
      t.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = sum(parts);
    }
  return t;
}

EMTensor em_tensor(const Lagrangian& lm, const VariationTable& rules) {
  return em_tensor(*lm.model, em_source_form(lm, rules));
}

EMTensor tensorial(const ModelSpec& m, const EMTensor& density) {
  if (!density.density) return density;
  Expr inv = pow(m.det_body(), Exponent(1, 2));
  EMTensor t = density;
  t.density = false;
  for (auto& row : t.t)
    for (Expr& e : row) e = e * inv;
  return t;
}

std::vector<std::vector<Expr>> lower_second(const ModelSpec& m, const EMTensor& t) {
  const int n = m.dim();
  std::vector<std::vector<Expr>> out(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      std::vector<Expr> parts;
      for (int h = 0; h < n; ++h) parts.push_back(m.metric_lowered(j, h) * t.at(h, i));
      out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = sum(parts);
    }
  return out;
}

namespace {

// -(y^A_i) tau_A summed over A (all C^A_i vanish).
Expr contact_term(const std::map<Atom, Expr>& e, int i) {
  std::vector<Expr> parts;
  for (const auto& [a, x] : e)
    if (!x.is_zero()) parts.push_back(-(Expr(a.promoted(i)) * x));
  return sum(parts);
}

Expr divergence_row(const ModelSpec& m, const EMTensor& t, int i) {
  std::vector<Expr> parts;
  for (int j = 0; j < m.dim(); ++j) parts.push_back(total_derivative(m, t.at(j, i), j));
  return sum(parts);
}

std::map<Atom, Expr> matter_el(const Lagrangian& lm) {
  const ModelSpec& m = *lm.model;
  std::map<Atom, Expr> e;
  for (FieldId f = 0; f < static_cast<FieldId>(m.bundles().size()); ++f) {
    if (m.is_background(f) || m.is_external(f)) continue;
    for (const Atom& y : m.component_atoms(f)) e.emplace(y, euler_lagrange(lm, y));
  }
  return e;
}

}  // namespace

std::vector<Expr> balance_function(const Lagrangian& lm) {
  const ModelSpec& m = *lm.model;
  SourceForm tau = em_source_form(lm);
  EMTensor t = em_tensor(m, tau);
  std::vector<Expr> b;
  for (int i = 0; i < m.dim(); ++i) b.push_back(contact_term(tau.tau, i) - divergence_row(m, t, i));
  return b;
}

std::vector<Expr> balance_residual_onshell(const Lagrangian& lm) {
  const ModelSpec& m = *lm.model;
  SourceForm tau = em_source_form(lm);
  EMTensor t = em_tensor(m, tau);
  std::vector<Expr> r;
  for (int i = 0; i < m.dim(); ++i) r.push_back(divergence_row(m, t, i) - contact_term(tau.tau, i));
  return r;
}

NoetherIdentity total_noether_identity(const Lagrangian& lm) {
  const ModelSpec& m = *lm.model;
  CovarianceReport cov = check_covariance(lm);
  if (!cov.covariant)
    throw ModelError("matter Lagrangian is not generally covariant (" + std::to_string(cov.failing.size()) +
                     " nonzero xi coefficients)");
  const int n = m.dim();
  NoetherIdentity out;
  out.onshell = balance_residual_onshell(lm);
  std::map<Atom, Expr> e = matter_el(lm);
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> parts{contact_term(e, i)};
    for (int j = 0; j < n; ++j) {
      std::vector<Expr> flux;
      for (const auto& [y, x] : e) {
        Expr c = lift_coefficient(m, y, i, j);
        if (!c.is_zero() && !x.is_zero()) flux.push_back(c * x);
      }
      parts.push_back(-total_derivative(m, sum(flux), j));
    }
    Expr matter = sum(parts);
    out.residual.push_back(out.onshell[static_cast<std::size_t>(i)] - matter);
    out.matter.push_back(std::move(matter));
  }
  return out;
}

NoetherEquivalence noether_equivalence_check(const Lagrangian& lm) {
  const ModelSpec& m = *lm.model;
  const int n = m.dim();
  Prolongation pv(m, generic_lift(m));
  std::vector<Expr> j = noether_current(lm, pv);
  EMTensor t = em_tensor(lm);
  std::map<Atom, Expr> e = matter_el(lm);
  NoetherEquivalence out;
  std::vector<Expr> div;
  for (int jj = 0; jj < n; ++jj) {
    std::vector<Expr> parts{j[static_cast<std::size_t>(jj)]};
    for (int i = 0; i < n; ++i) {
      Expr xi(m.xi(i));
      parts.push_back(-(t.at(jj, i) * xi));
      for (const auto& [y, x] : e) {
        Expr c = lift_coefficient(m, y, i, jj);
        if (!c.is_zero() && !x.is_zero()) parts.push_back(-(c * x * xi));
      }
    }
    Expr d = sum(parts);
    div.push_back(total_derivative(m, d, jj));
    out.difference.push_back(std::move(d));
  }
  out.divergence = sum(div);
  return out;
}

Expr apply_gauge(const ModelSpec& m, const Expr& e, const std::map<Atom, Expr>& phi) {
  Bindings b;
  for (const Atom& a : jet_atoms(e)) {
    auto it = phi.find(a.underived());
    if (it == phi.end()) continue;
    b.emplace(a, total_derivative(m, it->second, a.derivs()));
  }
  return substitute(e, b);
}

GaugeReport gauge_invariance_check(const Lagrangian& lm, const std::map<Atom, Expr>& phi) {
  const ModelSpec& m = *lm.model;
  for (const auto& [y, x] : phi) {
    auto f = m.field_of(y);
    if (!f || m.is_background(*f) || y.order() != 0) throw ModelError("gauge map must act on order-zero matter atoms");
    for (const Atom& a : x.free_atoms()) {
      auto g = m.field_of(a);
      if (a.is_jet() && (a.order() != 0 || !g || m.is_background(*g)))
        throw ModelError("gauge map may depend only on base coordinates and order-zero matter atoms");
    }
  }
  GaugeReport r;
  r.symmetry = apply_gauge(m, lm.density, phi) == lm.density;
  if (!r.symmetry) return r;
  EMTensor t = em_tensor(lm);
  for (int j = 0; j < m.dim(); ++j)
    for (int i = 0; i < m.dim(); ++i)
      if (!(apply_gauge(m, t.at(j, i), phi) == t.at(j, i))) r.changed.emplace_back(j, i);
  r.invariant = r.changed.empty();
  return r;
}

}  // namespace vartool
