#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vartool/emt.hpp"

namespace vartool {

/// Levi-Civita symbols of the model metric, G^i_{jk} at [i][j][k].
struct Christoffel {
  int n = 0;
  std::vector<Expr> c;

  const Expr& at(int i, int j, int k) const { return c[static_cast<std::size_t>((i * n + j) * n + k)]; }
};

/// Built from the contravariant jets only:
/// G^i_{jk} = -1/2 g_{jb} g^{ib}_{,k} - 1/2 g_{kb} g^{ib}_{,j} + 1/2 g^{il} g_{ja} g_{kb} g^{ab}_{,l}.
Christoffel christoffel(const ModelSpec& m);

enum class Slot { Up, Down };

/// Components of a tensor density of the given weight (a multiple of
/// |det g_{..}|^{weight/2}), row-major over `slots`.
struct TensorTable {
  int n = 0;
  std::vector<Slot> slots;
  std::vector<Expr> comps;
  Rational weight = 0;

  const Expr& at(const std::vector<int>& idx) const;
  Expr& at(const std::vector<int>& idx);
  static TensorTable zeros(int n, std::vector<Slot> slots);
};

/// The order-zero components of field `f` with its index structure.
TensorTable field_table(const ModelSpec& m, FieldId f);

/// nabla_k T with the derivative index appended as a new Down slot.
TensorTable covariant_derivative(const ModelSpec& m, const Christoffel& g, const TensorTable& t);

struct Curvature {
  int n = 0;
  std::vector<Expr> riemann;  // R^i_{jkl} at [i][j][k][l]
  std::vector<Expr> ricci;    // R_{jl} = R^k_{jkl}
  Expr scalar;                // g^{jl} R_{jl}

  const Expr& r(int i, int j, int k, int l) const {
    return riemann[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
  }
  const Expr& ric(int j, int l) const { return ricci[static_cast<std::size_t>(j * n + l)]; }
};

/// R^i_{jkl} = d_k G^i_{jl} - d_l G^i_{jk} + G^i_{km} G^m_{jl} - G^i_{lm} G^m_{jk}.
Curvature curvature(const ModelSpec& m);

/// R sqrt|det g|.
Expr hilbert_density(const ModelSpec& m);

struct EinsteinReport {
  int dim = 0;
  bool symbolic = false;
  bool ok = false;
  int points = 0;
  int skipped = 0;
  double max_rel_error = 0.0;  // |𝓔 - G sqrt| / max |G sqrt|
  double max_bianchi = 0.0;    // |d_j 𝓔^j_i - G^h_{ji} 𝓔^j_h| / (1 + max |term|)
  std::uint64_t seed = 0;
  std::vector<std::string> log;
};

/// Checks that 𝓔^j_i = g^{jh} tau_{hi}, with tau the symmetric Euler-Lagrange
/// form of R sqrt|det g|, is the Einstein density G^j_i sqrt|det g| and is
/// covariantly conserved.  n = 2 is decided symbolically (𝓔 vanishes
/// identically); larger n numerically at `points` sampled points against a
/// direct Ricci contraction.
EinsteinReport einstein_check(const ModelSpec& m, int points = 20, std::uint64_t seed = 1, double tol = 1e-9,
                              double bianchi_tol = 1e-7);

/// d_j 𝒯^j_i + y^A_{,i} tau_A for an arbitrary source form.
std::vector<Expr> raw_balance(const ModelSpec& m, const SourceForm& tau);

/// sqrt|det g| T^j_{i;j} + y^A_{;i} tau_A summed over non-metric components,
/// with T = 𝒯 / sqrt|det g|.  Equal to `raw_balance` identically.
std::vector<Expr> covariant_balance(const ModelSpec& m, const SourceForm& tau);

struct MetricAffineCheck {
  ModelPtr extended;  // the model plus opaque source fields
  EMTensor pipeline;  // C^{Aj}_i 𝔗_A
  EMTensor closed;    // 2 𝔗^j_i + (𝔗_i^{hl} N^j_{hl} - 𝔗_m^{jl} N^m_{il} - 𝔗_m^{hj} N^m_{hi})
  std::vector<Expr> raw;
  std::vector<Expr> covariant;
};

/// Energy-momentum tensor of a metric-affine model with opaque sources
/// 𝔗_{hk} (symmetric, for g^{hk}) and 𝔗_m^{hl} (for N^m_{hl}), computed both
/// through the lift coefficients and from the closed form, together with
/// both sides of the conservation law.  Requires a metric and a distortion.
MetricAffineCheck metric_affine_check(const ModelSpec& m);

}  // namespace vartool
