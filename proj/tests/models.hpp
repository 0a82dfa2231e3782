#pragma once

#include "vartool/model.hpp"

namespace vt_test {

using vartool::Expr;

inline vartool::ModelPtr metric_scalar(int n, bool lorentz = false) {
  std::vector<int> sig(static_cast<std::size_t>(n), lorentz ? -1 : 1);
  sig[0] = 1;
  return vartool::declare_model({n, sig}, {vartool::BundleSpec::metric(), vartool::BundleSpec::scalar("phi")}, 1);
}

/// g^{kl} phi_k phi_l (the kinetic scalar) for field `f`.
inline Expr kinetic(const vartool::ModelSpec& m, vartool::FieldId f) {
  std::vector<Expr> parts;
  for (int k = 0; k < m.dim(); ++k)
    for (int l = 0; l < m.dim(); ++l)
      parts.push_back(m.metric_upper(k, l) * Expr(m.atom(f, {}, {k})) * Expr(m.atom(f, {}, {l})));
  return vartool::sum(parts);
}

/// (1/2) g^{kl} phi_k phi_l sqrt|det g|.
inline Expr scalar_density(const vartool::ModelSpec& m, vartool::FieldId f = 1) {
  return vartool::Rational(1, 2) * kinetic(m, f) * m.sqrt_det();
}

}  // namespace vt_test
