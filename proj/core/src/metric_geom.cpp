#include "vartool/metric_geom.hpp"

#include <algorithm>
#include <cmath>

#include "vartool/error.hpp"
#include "vartool/numcheck.hpp"
#include "vartool/numeric.hpp"

namespace vartool {

namespace {

std::size_t flat(int n, const std::vector<int>& idx) {
  std::size_t k = 0;
  for (int i : idx) k = k * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
  return k;
}

std::size_t power(int n, std::size_t r) {
  std::size_t s = 1;
  for (std::size_t k = 0; k < r; ++k) s *= static_cast<std::size_t>(n);
  return s;
}

// Every index tuple of length r, row-major.
std::vector<std::vector<int>> tuples(int n, std::size_t r) {
  std::vector<std::vector<int>> out(power(n, r), std::vector<int>(r));
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::size_t x = k;
    for (std::size_t s = r; s-- > 0;) {
      out[k][s] = static_cast<int>(x % static_cast<std::size_t>(n));
      x /= static_cast<std::size_t>(n);
    }
  }
  return out;
}

FieldId require_metric(const ModelSpec& m) {
  auto g = m.metric();
  if (!g) throw ModelError("the model declares no metric");
  return *g;
}

}  // namespace

Christoffel christoffel(const ModelSpec& m) {
  const FieldId g = require_metric(m);
  (void)g;
  const int n = m.dim();
  auto up = [&](int a, int b) { return m.metric_upper(a, b); };
  std::vector<Expr> dg(static_cast<std::size_t>(n * n * n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n; ++k) dg[static_cast<std::size_t>((a * n + b) * n + k)] = total_derivative(m, up(a, b), k);
  auto d = [&](int a, int b, int k) -> const Expr& { return dg[static_cast<std::size_t>((a * n + b) * n + k)]; };
  // A^i_{jk} = g_{jb} g^{ib}_{,k}
  std::vector<Expr> a3(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::vector<Expr> parts;
        for (int b = 0; b < n; ++b) parts.push_back(m.metric_lowered(j, b) * d(i, b, k));
        a3[static_cast<std::size_t>((i * n + j) * n + k)] = sum(parts);
      }
  auto A = [&](int i, int j, int k) -> const Expr& { return a3[static_cast<std::size_t>((i * n + j) * n + k)]; };
  Christoffel c;
  c.n = n;
  c.c.resize(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k) {
        std::vector<Expr> parts{Rational(-1, 2) * (A(i, j, k) + A(i, k, j))};
        for (int l = 0; l < n; ++l) {
          std::vector<Expr> w;
          for (int a = 0; a < n; ++a) w.push_back(m.metric_lowered(j, a) * A(a, k, l));
          parts.push_back(Rational(1, 2) * up(i, l) * sum(w));
        }
        Expr x = sum(parts);
        c.c[static_cast<std::size_t>((i * n + j) * n + k)] = x;
        c.c[static_cast<std::size_t>((i * n + k) * n + j)] = x;
      }
  return c;
}

const Expr& TensorTable::at(const std::vector<int>& idx) const { return comps[flat(n, idx)]; }
Expr& TensorTable::at(const std::vector<int>& idx) { return comps[flat(n, idx)]; }

TensorTable TensorTable::zeros(int n, std::vector<Slot> slots) {
  TensorTable t;
  t.n = n;
  t.comps.resize(power(n, slots.size()));
  t.slots = std::move(slots);
  return t;
}

TensorTable field_table(const ModelSpec& m, FieldId f) {
  const BundleSpec& b = m.bundle(f);
  std::vector<Slot> slots;
  switch (b.kind) {
    case BundleKind::Scalar:
      break;
    case BundleKind::Metric:
      slots = {Slot::Up, Slot::Up};
      break;
    case BundleKind::Tensor:
    case BundleKind::Distortion:
      slots.assign(static_cast<std::size_t>(b.p), Slot::Up);
      slots.insert(slots.end(), static_cast<std::size_t>(b.q), Slot::Down);
      break;
  }
  TensorTable t = TensorTable::zeros(m.dim(), slots);
  for (const auto& idx : tuples(m.dim(), slots.size())) t.at(idx) = Expr(m.atom(f, idx));
  return t;
}

TensorTable covariant_derivative(const ModelSpec& m, const Christoffel& g, const TensorTable& t) {
  const int n = t.n;
  std::vector<Slot> slots = t.slots;
  slots.push_back(Slot::Down);
  TensorTable out = TensorTable::zeros(n, slots);
  out.weight = t.weight;
  const std::size_t r = t.slots.size();
  for (const auto& idx : tuples(n, r))
    for (int k = 0; k < n; ++k) {
      std::vector<Expr> parts{total_derivative(m, t.at(idx), k)};
      for (std::size_t s = 0; s < r; ++s) {
        std::vector<int> j = idx;
        for (int c = 0; c < n; ++c) {
          j[s] = c;
          const Expr& x = t.at(j);
          if (x.is_zero()) continue;
          if (t.slots[s] == Slot::Up)
            parts.push_back(g.at(idx[s], k, c) * x);
          else
            parts.push_back(-(g.at(c, k, idx[s]) * x));
        }
      }
      if (!t.weight.is_zero() && !t.at(idx).is_zero()) {
        std::vector<Expr> tr;
        for (int h = 0; h < n; ++h) tr.push_back(g.at(h, h, k));
        parts.push_back(-(t.weight * sum(tr) * t.at(idx)));
      }
      std::vector<int> o = idx;
      o.push_back(k);
      out.at(o) = sum(parts);
    }
  return out;
}

Curvature curvature(const ModelSpec& m) {
  const int n = m.dim();
  Christoffel g = christoffel(m);
  std::vector<Expr> dg(static_cast<std::size_t>(n * n * n * n));
  auto D = [&](int i, int j, int k, int l) -> Expr& { return dg[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = j; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          D(i, j, k, l) = total_derivative(m, g.at(i, j, k), l);
          D(i, k, j, l) = D(i, j, k, l);
        }
  Curvature c;
  c.n = n;
  c.riemann.resize(static_cast<std::size_t>(n * n * n * n));
  auto R = [&](int i, int j, int k, int l) -> Expr& {
    return c.riemann[static_cast<std::size_t>(((i * n + j) * n + k) * n + l)];
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          std::vector<Expr> parts{D(i, j, l, k), -D(i, j, k, l)};
          for (int h = 0; h < n; ++h) {
            parts.push_back(g.at(i, k, h) * g.at(h, j, l));
            parts.push_back(-(g.at(i, l, h) * g.at(h, j, k)));
          }
          R(i, j, k, l) = sum(parts);
          R(i, j, l, k) = -R(i, j, k, l);
        }
  c.ricci.resize(static_cast<std::size_t>(n * n));
  std::vector<Expr> sc;
  for (int j = 0; j < n; ++j)
    for (int l = j; l < n; ++l) {
      std::vector<Expr> parts;
      for (int k = 0; k < n; ++k) parts.push_back(R(k, j, k, l));
      Expr x = sum(parts);
      c.ricci[static_cast<std::size_t>(j * n + l)] = x;
      c.ricci[static_cast<std::size_t>(l * n + j)] = x;
      sc.push_back((j == l ? 1 : 2) * m.metric_upper(j, l) * x);
    }
  c.scalar = sum(sc);
  return c;
}

Expr hilbert_density(const ModelSpec& m) { return curvature(m).scalar * m.sqrt_det(); }

// ---- Einstein density -----------------------------------------------------------------

namespace {

numeric::MetricJets<double> metric_jets(const ModelSpec& m, FieldId g, const PointAssignment& p) {
  const int n = m.dim();
  numeric::MetricJets<double> j;
  j.n = n;
  j.g.resize(static_cast<std::size_t>(n * n));
  j.dg.resize(static_cast<std::size_t>(n * n * n));
  j.ddg.resize(static_cast<std::size_t>(n * n * n * n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      j.g[static_cast<std::size_t>(a * n + b)] = p.value(m.atom(g, {a, b})).to_double();
      for (int k = 0; k < n; ++k) {
        j.dg[static_cast<std::size_t>((a * n + b) * n + k)] = p.value(m.atom(g, {a, b}, {k})).to_double();
        for (int l = 0; l < n; ++l)
          j.ddg[static_cast<std::size_t>(((a * n + b) * n + k) * n + l)] =
              p.value(m.atom(g, {a, b}, {std::min(k, l), std::max(k, l)})).to_double();
      }
    }
  return j;
}

}  // namespace

EinsteinReport einstein_check(const ModelSpec& m, int points, std::uint64_t seed, double tol, double bianchi_tol) {
  const FieldId g = require_metric(m);
  const int n = m.dim();
  EinsteinReport rep;
  rep.dim = n;
  rep.seed = seed;
  if (n <= 2) {
    // G_{ij} vanishes identically in two dimensions and below.
    rep.symbolic = true;
    Lagrangian l{m.shared_from_this(), hilbert_density(m)};
    rep.ok = true;
    for (const Atom& y : m.component_atoms(g))
      if (!euler_lagrange(l, y).is_zero()) {
        rep.ok = false;
        rep.log.push_back("nonzero Euler-Lagrange expression for " + Expr(y).str());
      }
    return rep;
  }
  const int s = m.signature_sign();
  numeric::SeriesSpace sp(n, 3);
  const std::vector<Atom> comps = m.component_atoms(g);
  auto build = [&](numeric::Tape&, const numeric::SlotFn& slot) {
    numeric::MetricJets<numeric::Var> j;
    j.n = n;
    j.g.resize(static_cast<std::size_t>(n * n));
    j.dg.resize(static_cast<std::size_t>(n * n * n));
    j.ddg.resize(static_cast<std::size_t>(n * n * n * n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        j.g[static_cast<std::size_t>(a * n + b)] = slot(m.atom(g, {a, b}));
        for (int k = 0; k < n; ++k) {
          j.dg[static_cast<std::size_t>((a * n + b) * n + k)] = slot(m.atom(g, {a, b}, {k}));
          for (int l = 0; l < n; ++l)
            j.ddg[static_cast<std::size_t>(((a * n + b) * n + k) * n + l)] =
                slot(m.atom(g, {a, b}, {std::min(k, l), std::max(k, l)}));
        }
      }
    return numeric::hilbert_density(j, s);
  };
  rep.ok = true;
  for (int t = 0; t < points; ++t) {
    const std::uint64_t ts = trial_seed(seed, t);
    try {
      PointAssignment p = random_point(m, 0, ts);
      auto el = numeric::euler_lagrange(sp, p, comps, build);
      auto tau = [&](int a, int b) {
        const Atom y = m.atom(g, {a, b});
        numeric::Series e = el.at(y);
        e *= 1.0 / m.multiplicity(g, y.comps());
        return e;
      };
      // 𝓔^j_i = g^{jh} tau_{hi} as series around the point.
      std::vector<numeric::Series> ein(static_cast<std::size_t>(n * n));
      for (int jj = 0; jj < n; ++jj)
        for (int i = 0; i < n; ++i) {
          numeric::Series acc(sp);
          for (int h = 0; h < n; ++h) acc += numeric::section_series(sp, p, m.atom(g, {jj, h})) * tau(h, i);
          ein[static_cast<std::size_t>(jj * n + i)] = acc;
        }
      // Direct contraction G^j_i sqrt|det g| at the point.
      auto jets = metric_jets(m, g, p);
      numeric::CurvatureParts<double> c = numeric::curvature_parts(jets);
      const double root = std::pow(s * c.det, -0.5);
      double gmax = 0.0;
      double emax = 0.0;
      for (int jj = 0; jj < n; ++jj)
        for (int i = 0; i < n; ++i) {
          double acc = 0.0;
          for (int h = 0; h < n; ++h) {
            double gh = c.ricci[static_cast<std::size_t>(h * n + i)] - 0.5 * c.lower[static_cast<std::size_t>(h * n + i)] * c.scalar;
            acc += jets.up(jj, h) * gh;
          }
          acc *= root;
          gmax = std::max(gmax, std::fabs(acc));
          emax = std::max(emax, std::fabs(ein[static_cast<std::size_t>(jj * n + i)].value() - acc));
        }
      double rel = emax / std::max(gmax, 1e-12);
      rep.max_rel_error = std::max(rep.max_rel_error, rel);
      if (!(rel < tol)) {
        rep.ok = false;
        rep.log.push_back("point " + std::to_string(t) + ": relative error " + std::to_string(rel));
      }
      for (int i = 0; i < n; ++i) {
        double res = 0.0;
        double scale = 0.0;
        for (int jj = 0; jj < n; ++jj) {
          double d = ein[static_cast<std::size_t>(jj * n + i)].partial(jj).value();
          res += d;
          scale = std::max(scale, std::fabs(d));
          for (int h = 0; h < n; ++h) {
            double x = c.gamma[static_cast<std::size_t>((h * n + jj) * n + i)] * ein[static_cast<std::size_t>(jj * n + h)].value();
            res -= x;
            scale = std::max(scale, std::fabs(x));
          }
        }
        double b = std::fabs(res) / (1.0 + scale);
        rep.max_bianchi = std::max(rep.max_bianchi, b);
        if (!(b < bianchi_tol)) {
          rep.ok = false;
          rep.log.push_back("point " + std::to_string(t) + ": Bianchi residual " + std::to_string(b));
        }
      }
      ++rep.points;
    } catch (const DomainError& e) {
      ++rep.skipped;
      rep.log.push_back("point " + std::to_string(t) + " skipped: " + e.what());
    }
  }
  if (rep.skipped * 2 > points) {
    rep.ok = false;
    rep.log.push_back("inconclusive: more than half of the points were skipped");
  }
  return rep;
}

// ---- balance laws -------------------------------------------------------------------

std::vector<Expr> raw_balance(const ModelSpec& m, const SourceForm& tau) {
  const int n = m.dim();
  EMTensor t = em_tensor(m, tau);
  std::vector<Expr> out;
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> parts;
    for (int j = 0; j < n; ++j) parts.push_back(total_derivative(m, t.at(j, i), j));
    for (const auto& [a, x] : tau.tau)
      if (!x.is_zero()) parts.push_back(Expr(a.promoted(i)) * x);
    out.push_back(sum(parts));
  }
  return out;
}

std::vector<Expr> covariant_balance(const ModelSpec& m, const SourceForm& tau) {
  const FieldId g = require_metric(m);
  const int n = m.dim();
  Christoffel gam = christoffel(m);
  EMTensor tt = tensorial(m, em_tensor(m, tau));
  TensorTable t = TensorTable::zeros(n, {Slot::Up, Slot::Down});
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) t.at({j, i}) = tt.at(j, i);
  TensorTable dt = covariant_derivative(m, gam, t);
  std::vector<std::vector<Expr>> parts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<Expr> div;
    for (int j = 0; j < n; ++j) div.push_back(dt.at({j, i, j}));
    parts[static_cast<std::size_t>(i)].push_back(sum(div) * m.sqrt_det());
  }
  std::vector<FieldId> fields;
  for (const auto& [a, x] : tau.tau)
    if (a.field() != g && std::find(fields.begin(), fields.end(), a.field()) == fields.end()) fields.push_back(a.field());
  for (FieldId f : fields) {
    TensorTable dy = covariant_derivative(m, gam, field_table(m, f));
    for (const auto& idx : tuples(n, static_cast<std::size_t>(m.rank(f)))) {
      auto it = tau.tau.find(m.atom(f, idx));
      if (it == tau.tau.end() || it->second.is_zero()) continue;
      for (int i = 0; i < n; ++i) {
        std::vector<int> o = idx;
        o.push_back(i);
        parts[static_cast<std::size_t>(i)].push_back(dy.at(o) * it->second);
      }
    }
  }
  std::vector<Expr> out;
  for (auto& p : parts) out.push_back(sum(p));
  return out;
}

MetricAffineCheck metric_affine_check(const ModelSpec& m) {
  const FieldId g = require_metric(m);
  auto nd = m.distortion();
  if (!nd) throw ModelError("the model declares no distortion");
  const FieldId nf = *nd;
  const int n = m.dim();
  std::vector<BundleSpec> bundles = m.bundles();
  const auto tg = static_cast<FieldId>(bundles.size());
  const FieldId tn = tg + 1;
  bundles.push_back(BundleSpec::tensor("frakT_g", 0, 2));
  bundles.push_back(BundleSpec::tensor("frakT_N", 2, 1));
  MetricAffineCheck r;
  r.extended = declare_model(m.manifold(), bundles, m.max_order(), m.jet_cap());
  const ModelSpec& x = *r.extended;
  auto T2 = [&](int h, int k) { return Expr(x.atom(tg, {std::min(h, k), std::max(h, k)})); };
  auto T3 = [&](int mm, int h, int l) { return Expr(x.atom(tn, {h, l, mm})); };  // 𝔗_m^{hl}
  auto N = [&](int mm, int h, int l) { return Expr(x.atom(nf, {mm, h, l})); };

  SourceForm plain;
  SourceForm dens;
  for (int h = 0; h < n; ++h)
    for (int k = h; k < n; ++k) {
      Expr v = (h == k ? 1 : 2) * T2(h, k);
      plain.tau.emplace(x.atom(g, {h, k}), v);
      dens.tau.emplace(x.atom(g, {h, k}), v * x.sqrt_det());
    }
  for (int mm = 0; mm < n; ++mm)
    for (int h = 0; h < n; ++h)
      for (int l = 0; l < n; ++l) {
        plain.tau.emplace(x.atom(nf, {mm, h, l}), T3(mm, h, l));
        dens.tau.emplace(x.atom(nf, {mm, h, l}), T3(mm, h, l) * x.sqrt_det());
      }
  r.pipeline = em_tensor(x, plain);
  r.pipeline.density = false;
  r.closed.density = false;
  r.closed.t.assign(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::vector<Expr> parts;
      for (int h = 0; h < n; ++h) parts.push_back(2 * x.metric_upper(j, h) * T2(h, i));
      for (int h = 0; h < n; ++h)
        for (int l = 0; l < n; ++l) {
          parts.push_back(T3(i, h, l) * N(j, h, l));
          parts.push_back(-(T3(h, j, l) * N(h, i, l)));
          parts.push_back(-(T3(h, l, j) * N(h, l, i)));
        }
      r.closed.t[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = sum(parts);
    }
  r.raw = raw_balance(x, dens);
  r.covariant = covariant_balance(x, dens);
  return r;
}

}  // namespace vartool
