// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "gen.hpp"
#include "jetgen.hpp"
#include "models.hpp"
#include "vartool/completion.hpp"
#include "vartool/emt.hpp"
#include "vartool/frontend.hpp"
#include "vartool/metric_geom.hpp"
#include "vartool/numcheck.hpp"
#include "vartool/numeric.hpp"

using namespace vartool;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(VARTOOL_MODELS_DIR) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t at(int i) { return static_cast<std::size_t>(i); }

Expr lower_index(const ModelSpec& m, const std::function<Expr(int)>& v, int i) {
  std::vector<Expr> parts;
  for (int a = 0; a < m.dim(); ++a) parts.push_back(m.metric_lowered(i, a) * v(a));
  return sum(parts);
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

int failures = 0;

void criterion(int k, const char* name, const std::function<Outcome()>& body) {
  auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("criterion %2d %-28s %s  (%s%s%.2f s)\n", k, name, o.pass ? "PASS" : "FAIL", o.detail.c_str(),
              o.detail.empty() ? "" : ", ", secs);
  std::fflush(stdout);
}

double since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

// Rebuilds an unnormalized tree from a canonical expression.
Raw to_raw(const Expr& e) {
  std::vector<Raw> terms;
  for (const Term& t : e.terms()) {
    std::vector<Raw> f{Raw::num(t.coef)};
    for (const Factor& x : t.mono)
      f.push_back(Raw::power(x.atom.is_power() ? to_raw(x.atom.body()) : Raw::sym(x.atom), x.exp));
    terms.push_back(Raw::mul(std::move(f)));
  }
  return Raw::add(std::move(terms));
}

Raw random_raw(vt_test::ExprGen& g, int depth) {
  int pick = depth <= 0 ? g.uniform(0, 1) : g.uniform(0, 4);
  switch (pick) {
    case 0:
      return Raw::num(g.coef());
    case 1:
      return Raw::sym(g.atom());
    case 2:
    case 3: {
      std::vector<Raw> parts;
      int n = g.uniform(2, 3);
      for (int k = 0; k < n; ++k) parts.push_back(random_raw(g, depth - 1));
      return pick == 2 ? Raw::add(std::move(parts)) : Raw::mul(std::move(parts));
    }
    default: {
      static const Exponent qs[] = {Exponent(2), Exponent(-1), Exponent(1, 2), Exponent(-3, 2)};
      const Exponent& q = qs[g.uniform(0, 3)];
      if (q == Exponent(2)) return Raw::power(random_raw(g, depth - 1), q);
      // Keep bodies away from zero.
      Raw a = Raw::sym(g.atom());
      return Raw::power(Raw::add({Raw::num(1), Raw::mul({a, a})}), q);
    }
  }
}

ModelPtr scalars(int n, int count) {
  std::vector<BundleSpec> b;
  for (int k = 0; k < count; ++k) b.push_back(BundleSpec::scalar(std::string(1, static_cast<char>('u' + k))));
  return declare_model({n, std::vector<int>(at(n), 1)}, b, 2);
}

}  // namespace

int main() {
  criterion(1, "fluid-lagrangian-recovery", [] {
    Outcome o;
    ModelFile f = parse_model(slurp("fluid.vl"));
    const ModelSpec& m = *f.model;
    auto t = std::chrono::steady_clock::now();
    Lagrangian l = vainberg_tonti(f.source("dust").spec, ScalingLaw::metric(m), f.rules);
    double secs = since(t);
    Expr want = -(Expr(m.atom(m.id("rho"), {})) * m.sqrt_det());
    o.require(l.density == want, "lambda = " + l.density.str());
    o.require(secs < 5.0, "completion took " + std::to_string(secs) + " s");
    std::ostringstream out, err;
    int code = run_command({"complete", std::string(VARTOOL_MODELS_DIR) + "/fluid.vl", "--expect", "-rho*sqrtg"}, out, err);
    o.require(code == 0, "vartool complete exited " + std::to_string(code) + ": " + err.str());
    return o;
  });

  criterion(2, "fluid-energy-momentum", [] {
    Outcome o;
    ModelFile f = parse_model(slurp("fluid.vl"));
    const ModelSpec& m = *f.model;
    int n = m.dim();
    Expr rho(m.atom(m.id("rho"), {})), p(m.atom(m.id("p"), {}));
    auto u = [&](int i) { return Expr(m.atom(m.id("u"), {i})); };
    EMTensor t = tensorial(m, em_tensor({f.model, f.lagrangian()}, f.variations));
    int bad_mixed = 0, bad_upper = 0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        if (!(t.at(j, i) == (p + rho) * u(j) * lower_index(m, u, i) - (i == j ? p : Expr()))) ++bad_mixed;
        std::vector<Expr> raised;
        for (int h = 0; h < n; ++h) raised.push_back(t.at(j, h) * m.metric_upper(h, i));
        if (!(sum(raised) == (p + rho) * u(j) * u(i) - p * m.metric_upper(j, i))) ++bad_upper;
      }
    o.require(bad_mixed == 0, std::to_string(bad_mixed) + " mixed components differ");
    o.require(bad_upper == 0, std::to_string(bad_upper) + " raised components differ");
    return o;
  });

  criterion(3, "hilbert-2d-degenerate", [] {
    Outcome o;
    auto t = std::chrono::steady_clock::now();
    ModelFile f = parse_model(slurp("hilbert2.vl"));
    Lagrangian l{f.model, f.lagrangian()};
    for (const Atom& y : f.model->component_atoms(*f.model->metric()))
      o.require(euler_lagrange(l, y).is_zero(), "nonzero Euler-Lagrange component");
    double secs = since(t);
    o.require(secs < 30.0, "took " + std::to_string(secs) + " s");
    return o;
  });

  criterion(4, "einstein-oracle-n4", [] {
    Outcome o;
    auto t = std::chrono::steady_clock::now();
    ModelFile f = parse_model(slurp("hilbert4.vl"));
    EinsteinReport r = einstein_check(*f.model, 20, 1, 1e-9, 1e-7);
    double secs = since(t);
    char buf[128];
    std::snprintf(buf, sizeof buf, "points=%d rel=%.2e bianchi=%.2e", r.points, r.max_rel_error, r.max_bianchi);
    o.detail = buf;
    o.require(r.points >= 20, "too few points");
    o.require(r.max_rel_error < 1e-9, "relative error");
    o.require(r.max_bianchi < 1e-7, "Bianchi residual");
    o.require(r.ok, "check reported failure");
    o.require(secs < 120.0, "took " + std::to_string(secs) + " s");
    return o;
  });

  criterion(5, "scalar-energy-momentum", [] {
    Outcome o;
    for (int n = 2; n <= 4; ++n) {
      auto m = vt_test::metric_scalar(n, n == 4);
      auto low = lower_second(*m, tensorial(*m, em_tensor({m, vt_test::scalar_density(*m)})));
      Expr k = vt_test::kinetic(*m, 1);
      auto phi = [&](int i) { return Expr(m->atom(1, {}, {i})); };
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (!(low[at(i)][at(j)] == phi(i) * phi(j) - Rational(1, 2) * m->metric_lowered(i, j) * k))
            o.require(false, "n=" + std::to_string(n) + " T_" + std::to_string(i) + std::to_string(j));
    }
    return o;
  });

  criterion(6, "total-noether-identity", [] {
    Outcome o;
    {
      auto m = vt_test::metric_scalar(3);
      Lagrangian l{m, vt_test::scalar_density(*m)};
      NoetherIdentity id = total_noether_identity(l);
      auto on = balance_residual_onshell(l);
      Expr e = euler_lagrange(l, m->atom(1, {}));
      for (int i = 0; i < 3; ++i) {
        // R_i = onshell_i + in_r_i, with in_r the matter terms as they enter R_i.
        Expr in_r = -id.matter[at(i)];
        o.require(id.residual[at(i)].is_zero(), "scalar residual");
        o.require(on[at(i)] == -in_r, "scalar on-shell balance");
        o.require(on[at(i)] == -(Expr(m->atom(1, {}, {i})) * e), "scalar balance against -phi_i E");
      }
    }
    {
      auto m = declare_model({2, {}}, {BundleSpec::metric(), BundleSpec::tensor("v", 1, 0)}, 1);
      auto v = [&](int i) { return Expr(m->atom(1, {i})); };
      Expr l;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) l += m->metric_lowered(i, j) * v(i) * v(j);
      Lagrangian lm{m, l * m->sqrt_det()};
      NoetherIdentity id = total_noether_identity(lm);
      auto on = balance_residual_onshell(lm);
      for (int i = 0; i < 2; ++i) {
        o.require(id.residual[at(i)].is_zero(), "vector residual");
        Expr in_r = -id.matter[at(i)];
        o.require(on[at(i)] == -in_r, "vector on-shell balance");
      }
    }
    return o;
  });

  criterion(7, "metric-affine-closed-form", [] {
    Outcome o;
    auto m = declare_model({2, {1, 1}}, {BundleSpec::metric(), BundleSpec::distortion()}, 1);
    MetricAffineCheck r = metric_affine_check(*m);
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) o.require(r.pipeline.at(j, i) == r.closed.at(j, i), "tensor differs from closed form");
    for (int i = 0; i < 2; ++i) o.require((r.raw[at(i)] - r.covariant[at(i)]).is_zero(), "conservation law differs");
    return o;
  });

  criterion(8, "covariant-balance", [] {
    Outcome o;
    for (int n = 2; n <= 3; ++n) {
      auto m = vt_test::metric_scalar(n, n == 3);
      SourceForm tau = em_source_form({m, vt_test::scalar_density(*m)});
      auto raw = raw_balance(*m, tau);
      auto cov = covariant_balance(*m, tau);
      for (int i = 0; i < n; ++i) o.require((cov[at(i)] - raw[at(i)]).is_zero(), "n=" + std::to_string(n));
    }
    return o;
  });

  criterion(9, "first-variation-identity", [] {
    Outcome o;
    int cases = 0;
    for (int n = 1; n <= 2; ++n) {
      auto m = scalars(n, 2);
      vt_test::JetGen g(900 + static_cast<std::uint64_t>(n), m);
      for (int k = 0; k < 30; ++k, ++cases)
        if (!first_variation_residual({m, g.lagrangian(2)}, g.vector_field()).is_zero())
          o.require(false, "case " + std::to_string(cases));
    }
    o.detail = std::to_string(cases) + " cases" + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
  });

  criterion(10, "gauge-invariance", [] {
    Outcome o;
    ModelFile f = parse_model(slurp("twoscalar.vl"));
    const ModelSpec& m = *f.model;
    Atom a = m.atom(m.id("a"), {}), b = m.atom(m.id("b"), {});
    std::map<Atom, Expr> rot{{a, Rational(3, 5) * Expr(a) - Rational(4, 5) * Expr(b)},
                             {b, Rational(4, 5) * Expr(a) + Rational(3, 5) * Expr(b)}};
    Lagrangian l{f.model, f.lagrangian()};
    GaugeReport r = gauge_invariance_check(l, rot);
    o.require(r.symmetry, "rotation is not a symmetry");
    o.require(r.invariant, std::to_string(r.changed.size()) + " components changed");
    // Direct recomputation on the rotated fields.
    EMTensor t = em_tensor(l);
    for (int j = 0; j < m.dim(); ++j)
      for (int i = 0; i < m.dim(); ++i)
        o.require(apply_gauge(m, t.at(j, i), rot) == t.at(j, i), "direct recomputation differs");
    return o;
  });

  criterion(11, "completion-consistency", [] {
    Outcome o;
    for (int n = 2; n <= 3; ++n) {
      auto m = vt_test::metric_scalar(n, n == 3);
      Lagrangian l{m, vt_test::scalar_density(*m)};
      for (std::vector<FieldId> over : {std::vector<FieldId>{1}, std::vector<FieldId>{0, 1}}) {
        CompletionResult c = canonical_completion({m, over, source_entries(l, over)});
        for (auto& [y, k] : c.kappa) o.require(k.is_zero(), "kappa of an Euler-Lagrange form");
      }
    }
    ModelFile f = parse_model(slurp("nonvariational.vl"));
    const ModelSpec& m = *f.model;
    Atom u = m.atom(m.id("u"), {}), v = m.atom(m.id("v"), {});
    CompletionResult c = canonical_completion(f.source("twist").spec);
    o.require(c.kappa.at(u) == Rational(-1, 2) * Expr(v), "kappa_u = " + c.kappa.at(u).str());
    o.require(c.kappa.at(v) == Rational(1, 2) * Expr(u), "kappa_v = " + c.kappa.at(v).str());
    return o;
  });

  criterion(12, "kernel-properties", [] {
    Outcome o;
    const int cases = 100;
    std::vector<std::string> counts;
    auto suite = [&](const char* name, const std::function<bool(int)>& prop) {
      int passed = 0;
      for (int k = 0; k < cases; ++k)
        if (prop(k)) ++passed;
      counts.push_back(std::string(name) + " " + std::to_string(passed) + "/" + std::to_string(cases));
      o.require(passed == cases, name);
    };

    std::vector<Atom> pool{Atom::base(0), Atom::base(1), Atom::jet(0, {}), Atom::jet(0, {}, {0}), Atom::jet(1, {}, {0, 1}),
                           Atom::external("rho")};
    vt_test::ExprGen eg(1201, pool);
    suite("normalize", [&](int) {
      Expr e = normalize(random_raw(eg, 3));
      return normalize(to_raw(e)) == e && Expr::from_terms(e.terms()) == e;
    });

    auto m2 = scalars(2, 2);
    vt_test::JetGen jg(1202, m2);
    suite("commute", [&](int) {
      Expr e = jg.lagrangian(2);
      int i = jg.uniform(0, 1), j = jg.uniform(0, 1);
      return total_derivative(*m2, total_derivative(*m2, e, i), j) == total_derivative(*m2, total_derivative(*m2, e, j), i);
    });

    suite("divergence", [&](int) {
      Expr div;
      for (int i = 0; i < 2; ++i) div += total_derivative(*m2, jg.lagrangian(1), i);
      bool ok = true;
      for (FieldId f = 0; f < 2; ++f) ok = ok && euler_lagrange({m2, div}, m2->atom(f, {})).is_zero();
      return ok;
    });

    // The Euler-Lagrange form of a divergence is symbolically zero; the
    // series-based numeric operator must agree at random points.
    numeric::SeriesSpace sp(2, 3);
    std::vector<Atom> comps{m2->atom(0, {}), m2->atom(1, {})};
    suite("symbolic-zero-numeric", [&](int k) {
      Expr div;
      for (int i = 0; i < 2; ++i) div += total_derivative(*m2, jg.lagrangian(1) * Expr(jg.jet(1)), i);
      for (FieldId f = 0; f < 2; ++f)
        if (!euler_lagrange({m2, div}, m2->atom(f, {})).is_zero()) return false;
      PointAssignment p = random_point(*m2, 0, trial_seed(1204, k));
      auto num = numeric::euler_lagrange(sp, p, comps, div);
      double scale = 1.0 + std::fabs(eval(div, p));
      for (const Atom& y : comps)
        if (std::fabs(num.at(y).value()) > 1e-9 * scale) return false;
      return true;
    });

    ModelFile mf = parse_model(
        "manifold dim=3 signature=(+,-,-)\nfield g : metric\nfield phi : scalar\nfield N : distortion\n"
        "field rho : scalar external weight=-3/2 positive\nfield u : tensor(1,0) external\n");
    const ModelSpec& pm = *mf.model;
    std::vector<Atom> ppool{Atom::base(1),         pm.atom(0, {0, 1}),    pm.atom(0, {2, 2}, {1}), pm.atom(1, {}, {0, 2}),
                            pm.atom(2, {2, 0, 1}), pm.atom(3, {}), pm.atom(4, {1}),         pm.xi(1, {0})};
    vt_test::ExprGen pg(1205, ppool);
    AtomNamer namer = model_namer(pm);
    suite("round-trip", [&](int) {
      Expr e = pg.with_powers();
      if (pg.uniform(0, 3) == 0) e *= pm.sqrt_det();
      std::string text = to_text(e, namer);
      return parse_expression(pm, text) == e;
    });

    for (const std::string& c : counts) o.detail += (o.detail.empty() ? "" : ", ") + c;
    return o;
  });

  std::printf("%s\n", failures == 0 ? "all criteria pass" : (std::to_string(failures) + " criteria fail").c_str());
  return failures == 0 ? 0 : 1;
}
