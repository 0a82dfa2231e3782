#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vartool/expr.hpp"

namespace vartool {

enum class BundleKind { Scalar, Tensor, Metric, Distortion };
enum class Role { Background, Matter };

struct ManifoldSpec {
  int dim = 1;
  std::vector<int> signature;  // entries +1 / -1, defaults to all +1
};

struct BundleSpec {
  std::string name;
  BundleKind kind = BundleKind::Scalar;
  int p = 0;  // contravariant rank for Tensor
  int q = 0;  // covariant rank for Tensor
  Role role = Role::Matter;
  /// External symbols are parameters: no jets, no lift, d_i = 0.
  bool external = false;
  std::optional<Rational> weight;
  /// Sampled from a positive box by the numeric oracle.
  bool positive = false;

  static BundleSpec scalar(std::string name, Role role = Role::Matter);
  static BundleSpec tensor(std::string name, int p, int q, Role role = Role::Matter);
  static BundleSpec metric(std::string name = "g");
  static BundleSpec distortion(std::string name = "N");
};

using FieldId = int;

inline constexpr int kMaxDim = 6;
inline constexpr int kDefaultJetCap = 6;

class ModelSpec;
using ModelPtr = std::shared_ptr<const ModelSpec>;

/// Validates the declarations and builds the immutable model.
ModelPtr declare_model(ManifoldSpec manifold, std::vector<BundleSpec> bundles, int max_order,
                       int jet_cap = kDefaultJetCap);

/// The configuration manifold: base, bundles and jet-atom registry.
class ModelSpec : public std::enable_shared_from_this<ModelSpec> {
 public:
  int dim() const { return manifold_.dim; }
  const ManifoldSpec& manifold() const { return manifold_; }
  /// Sign of the determinant of the signature matrix.
  int signature_sign() const;
  int max_order() const { return max_order_; }
  /// Highest jet order any total derivative may produce.
  int jet_cap() const { return jet_cap_; }

  const std::vector<BundleSpec>& bundles() const { return bundles_; }
  const BundleSpec& bundle(FieldId f) const { return bundles_.at(static_cast<std::size_t>(f)); }
  std::optional<FieldId> find(const std::string& name) const;
  /// Like `find`, throwing ModelError for unknown names.
  FieldId id(const std::string& name) const;
  std::optional<FieldId> metric() const { return metric_; }
  std::optional<FieldId> distortion() const { return distortion_; }

  /// Number of component indices of a field (the auxiliary xi field has 1).
  int rank(FieldId f) const;
  /// Canonical component tuples; metric pairs are listed with i <= j.
  std::vector<std::vector<int>> components(FieldId f) const;
  /// Number of ordered index tuples a canonical component stands for.
  int multiplicity(FieldId f, const std::vector<int>& comps) const;
  bool is_external(FieldId f) const;
  bool is_background(FieldId f) const;

  /// Jet atom (or external atom) of a field; metric pairs are canonicalized.
  Atom atom(FieldId f, std::vector<int> comps, std::vector<int> derivs = {}) const;
  /// Order-zero atoms of every component of `f`.
  std::vector<Atom> component_atoms(FieldId f) const;
  /// Field of a jet or external atom registered in this model.
  std::optional<FieldId> field_of(const Atom& a) const;

  /// Field id reserved for the generic vector field xi.
  FieldId xi_field() const { return static_cast<FieldId>(bundles_.size()); }
  Atom xi(int i, std::vector<int> derivs = {}) const;
  bool is_xi(const Atom& a) const { return a.is_jet() && a.field() == xi_field(); }

  /// Contravariant metric component g^{ij} as an expression.
  Expr metric_upper(int i, int j) const;
  /// Covariant metric component g_{ij} = s adj(g^..)_{ij} / (s det g^..).
  const Expr& metric_lowered(int i, int j) const;
  /// s det(g^..), the positive body under the volume density.
  const Expr& det_body() const;
  /// sqrt|det g_{ij}| = (s det g^..)^(-1/2).
  const Expr& sqrt_det() const;

 private:
  friend ModelPtr declare_model(ManifoldSpec, std::vector<BundleSpec>, int, int);
  ModelSpec() = default;
  void build_metric_cache();

  ManifoldSpec manifold_;
  std::vector<BundleSpec> bundles_;
  int max_order_ = 1;
  int jet_cap_ = kDefaultJetCap;
  std::optional<FieldId> metric_;
  std::optional<FieldId> distortion_;
  std::map<std::string, FieldId> by_name_;
  Expr det_body_;
  Expr sqrt_det_;
  std::vector<Expr> lowered_;  // row-major n x n
};

/// Coefficient C^{Aj}_i of xi^i_{,j} in the canonical lift of the component
/// `y` (an order-zero atom).  Externals and scalars give 0; the zeroth-order
/// coefficients C^A_i vanish for every supported bundle.
Expr lift_coefficient(const ModelSpec& m, const Atom& y, int i, int j);

/// Determinant of a square matrix of expressions by cofactor expansion.
Expr determinant(const std::vector<std::vector<Expr>>& a);

}  // namespace vartool
