#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vartool/emt.hpp"

namespace vartool {

/// Homothety chi_t: every component and jet of a field, or an external
/// symbol, is multiplied by t^w.  Base coordinates have weight 0.
struct ScalingLaw {
  std::map<FieldId, Rational> fields;
  std::map<std::string, Rational> externals;

  Rational weight(const ModelSpec& m, const Atom& a) const;

  /// Weight 1 on each field of `over`.
  static ScalingLaw fiber(const std::vector<FieldId>& over);
  /// g_{ij} -> t g_{ij}, i.e. weight -1 on the contravariant fundamentals,
  /// plus the weights declared on external symbols.
  static ScalingLaw metric(const ModelSpec& m);
};

/// The homotopy parameter, an external symbol named "t".
Atom homothety_parameter();

struct Homothetic {
  Expr scaled;
  /// Set when every term carries the same power of t (0 for constants).
  std::optional<Rational> degree;
};

/// Substitutes a -> t^w a.  Powers of sums whose scaled body is homogeneous
/// of degree d contribute t^(d q) and keep their original body.
Homothetic homothety_scale(const ModelSpec& m, const Expr& e, const ScalingLaw& law);

/// A source form on the fields `over`.  Metric entries are symmetric
/// components keyed by the pair atom g^{ij} (i <= j); other entries are
/// keyed by component atoms.  With `covariant`, metric entries are
/// eps^{ij} = d lambda / d g_{ij} and are paired with g_{ij}.
struct SourceSpec {
  ModelPtr model;
  std::vector<FieldId> over;
  std::map<Atom, Expr> eps;
  bool covariant = false;
};

/// Vainberg-Tonti Lagrangian int_0^1 (d/dt chi_t y^A) eps_A(chi_t y) dt.
/// Each relation in `rules` (read as rule == 0) is applied to the integrand
/// before integration.  Throws NonIntegrableHomotopy for a t-power <= -1 or
/// an integrand that is not a finite sum of t-powers.
Lagrangian vainberg_tonti(const SourceSpec& s, const std::optional<ScalingLaw>& law = std::nullopt,
                          const std::vector<Expr>& rules = {});

struct CompletionResult {
  Lagrangian vt_lagrangian;
  /// E(lambda) - eps in the convention of the input entries.
  std::map<Atom, Expr> kappa;
};

CompletionResult canonical_completion(const SourceSpec& s, const std::optional<ScalingLaw>& law = std::nullopt,
                                      const std::vector<Expr>& rules = {}, const VariationTable& variations = {});

/// Source form of a Lagrangian in the convention of `SourceSpec`
/// (symmetric metric entries, lowered to eps^{ij} when `covariant`).
std::map<Atom, Expr> source_entries(const Lagrangian& l, const std::vector<FieldId>& over, bool covariant = false,
                                    const VariationTable& variations = {});

}  // namespace vartool
