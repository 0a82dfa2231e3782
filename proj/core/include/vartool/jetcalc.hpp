#pragma once

#include <map>
#include <mutex>
#include <vector>

#include "vartool/model.hpp"

namespace vartool {

/// A Lagrangian density 𝓛 (coefficient of the volume form) on a model.
struct Lagrangian {
  ModelPtr model;
  Expr density;

  /// Highest jet order of a field atom in the density.
  int order() const;
};

/// Total derivative d_i; externals are constants.  Throws JetOrderError when
/// a promoted jet would exceed the model's jet cap.
Expr total_derivative(const ModelSpec& m, const Expr& e, int i);
/// d_{i1} ... d_{ik} e.
Expr total_derivative(const ModelSpec& m, const Expr& e, const std::vector<int>& multi);

/// Projectable vector field xi^i(x) d_i + Xi^A(x, y) d_A.  `vertical` is keyed
/// by order-zero component atoms; missing entries are 0.
struct VectorField {
  std::vector<Expr> xi;
  std::map<Atom, Expr> vertical;

  static VectorField zero(int n) { return VectorField{std::vector<Expr>(static_cast<std::size_t>(n)), {}}; }
};

/// Canonical lift of the generic vector field whose jets are the model's
/// auxiliary `xi` atoms; externals are not lifted.
VectorField generic_lift(const ModelSpec& m);

/// Prolongation of a projectable vector field, computed lazily and memoized.
class Prolongation {
 public:
  Prolongation(const ModelSpec& m, VectorField v);

  /// Xi_I for the jet atom y_I (Xi_{I,i} = d_i Xi_I - y_{I,j} d_i xi^j).
  Expr component(const Atom& jet) const;
  /// Xi_I - y_{I,k} xi^k.
  Expr vertical_part(const Atom& jet) const;
  const VectorField& field() const { return v_; }
  /// d_i xi^i.
  Expr divergence() const;

 private:
  const ModelSpec& m_;
  VectorField v_;
  mutable std::mutex mu_;
  mutable std::map<Atom, Expr> memo_;
};

/// (J^r Xi)(𝓛) + 𝓛 d_i xi^i.
Expr lie_derivative_lagrangian(const Lagrangian& l, const Prolongation& v);
Expr lie_derivative_lagrangian(const Lagrangian& l, const VectorField& v);

/// Euler-Lagrange expression of one order-zero component atom y:
/// sum over multisets I of (-1)^|I| d_I d𝓛/dy_I.  A metric pair (i<j) is a
/// single coordinate, so this is twice the symmetric-pair derivative.
Expr euler_lagrange(const Lagrangian& l, const Atom& y);
/// Euler-Lagrange expressions of every component of field `f`.
std::vector<std::pair<Atom, Expr>> euler_lagrange(const Lagrangian& l, FieldId f);

/// Principal Poincaré-Cartan form for orders <= 2 in the contact basis.
/// `contact[y_J][i]` is the coefficient of omega^{y_J} ∧ omega_i for |J| <= 1.
struct PoincareCartan {
  Expr horizontal;
  std::map<Atom, std::vector<Expr>> contact;
};
PoincareCartan poincare_cartan(const Lagrangian& l);

/// Noether current J^i = -(L xi^i + P^i Xi~ + P^{ji} Xi~_j).
std::vector<Expr> noether_current(const Lagrangian& l, const Prolongation& v);
std::vector<Expr> noether_current(const Lagrangian& l, const VectorField& v);

/// lie - sum Xi~ E + d_i J^i; identically 0 for orders <= 2.
Expr first_variation_residual(const Lagrangian& l, const VectorField& v);

struct CovarianceReport {
  bool covariant = true;
  /// (xi-jet monomial, nonzero coefficient) pairs.
  std::vector<std::pair<Monomial, Expr>> failing;
};
CovarianceReport check_covariance(const Lagrangian& l);

/// Field atoms (jets of non-external fields) occurring in `e`, including
/// inside power bodies.
std::vector<Atom> jet_atoms(const Expr& e);

}  // namespace vartool
