#pragma once

#include <map>
#include <string>
#include <vector>

#include "vartool/jetcalc.hpp"

namespace vartool {

/// Lift coefficients of every non-external component: C0[(A, i)] and
/// C1[(A, i, j)], zero entries omitted.
struct LiftCoeffs {
  std::map<std::pair<Atom, int>, Expr> c0;
  std::map<std::tuple<Atom, int, int>, Expr> c1;

  Expr first(const Atom& a, int i, int j) const;
};
LiftCoeffs canonical_lift(const ModelSpec& m);

/// Declared dependence of external symbols on field components: maps an
/// external atom to d(symbol)/d(y) per component coordinate y.  Entries are
/// added to Euler-Lagrange expressions through the chain rule.
using VariationTable = std::map<Atom, std::map<Atom, Expr>>;

/// Euler-Lagrange expression with the chain-rule contribution of `rules`.
Expr euler_lagrange(const Lagrangian& l, const Atom& y, const VariationTable& rules);

/// tau_A = E_A(L_m) for every background component A.  `tau` holds the
/// coordinate Euler-Lagrange expressions; `symmetric` divides metric pairs
/// by their multiplicity (the symmetric-pair convention).
struct SourceForm {
  std::map<Atom, Expr> tau;

  Expr symmetric(const ModelSpec& m, const Atom& a) const;
};
SourceForm em_source_form(const Lagrangian& lm, const VariationTable& rules = {});

/// n x n components, slot [j][i] = T^j_i.
struct EMTensor {
  std::vector<std::vector<Expr>> t;
  bool density = true;

  const Expr& at(int j, int i) const { return t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]; }
};

/// Density 𝒯^j_i = C^{Aj}_i tau_A.
EMTensor em_tensor(const Lagrangian& lm, const VariationTable& rules = {});
EMTensor em_tensor(const ModelSpec& m, const SourceForm& tau);
/// T = 𝒯 / sqrt|det g|; requires a metric.
EMTensor tensorial(const ModelSpec& m, const EMTensor& density);
/// T_{ij} = g_{jh} T^h_i.
std::vector<std::vector<Expr>> lower_second(const ModelSpec& m, const EMTensor& t);

/// B_i = (C^A_i - y^A_i) tau_A - d_j 𝒯^j_i.
std::vector<Expr> balance_function(const Lagrangian& lm);

struct NoetherIdentity {
  std::vector<Expr> residual;  // R_i, identically 0 for covariant L_m
  std::vector<Expr> onshell;   // d_j 𝒯^j_i - (C^A_i - y^A_i) tau_A
  std::vector<Expr> matter;    // (C^s_i - y^s_i) E_s - d_j(C^{sj}_i E_s)
};

/// Total Noether identity of a covariant matter Lagrangian.  Throws
/// ModelError carrying the covariance report when L_m is not covariant.
NoetherIdentity total_noether_identity(const Lagrangian& lm);

/// d_j 𝒯^j_i - (C^A_i - y^A_i) tau_A.
std::vector<Expr> balance_residual_onshell(const Lagrangian& lm);

struct NoetherEquivalence {
  /// D^j = J^j(lift xi) - 𝒯^j_i xi^i - C^{sj}_i E_s xi^i.
  std::vector<Expr> difference;
  /// d_j D^j, identically 0.
  Expr divergence;
};
NoetherEquivalence noether_equivalence_check(const Lagrangian& lm);

struct GaugeReport {
  bool symmetry = false;      // J*Phi L = L
  bool invariant = false;     // every 𝒯^j_i unchanged
  std::vector<std::pair<int, int>> changed;  // (j, i) slots that changed
};

/// `phi` maps order-zero matter atoms to expressions in order-zero matter
/// atoms and base coordinates; it is prolonged by total derivatives.
GaugeReport gauge_invariance_check(const Lagrangian& lm, const std::map<Atom, Expr>& phi);

/// Prolonged substitution y_I -> d_I phi(y) applied to `e`.
Expr apply_gauge(const ModelSpec& m, const Expr& e, const std::map<Atom, Expr>& phi);

}  // namespace vartool
