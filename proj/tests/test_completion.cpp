#include <chrono>

#include "doctest.h"
#include "gen.hpp"
#include "jetgen.hpp"
#include "models.hpp"
#include "vartool/completion.hpp"
#include "vartool/error.hpp"

using namespace vartool;

namespace {

ModelPtr two_scalars() {
  return declare_model({1, {1}}, {BundleSpec::scalar("u"), BundleSpec::scalar("v")}, 1);
}

BundleSpec external(BundleSpec b, Rational w, bool positive = false) {
  b.external = true;
  b.weight = w;
  b.positive = positive;
  return b;
}

ModelPtr fluid(int n) {
  std::vector<int> sig(static_cast<std::size_t>(n), -1);
  sig[0] = 1;
  return declare_model({n, sig},
                       {BundleSpec::metric(), external(BundleSpec::scalar("rho"), Rational(-3, 2), true),
                        external(BundleSpec::tensor("u", 1, 0), Rational(-1, 2)), external(BundleSpec::scalar("p"), 0)},
                       1);
}

Expr normalization(const ModelSpec& m) {
  std::vector<Expr> parts{Expr(-1)};
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j)
      parts.push_back(m.metric_lowered(i, j) * Expr(m.atom(2, {i})) * Expr(m.atom(2, {j})));
  return sum(parts);
}

Expr fluid_source(const ModelSpec& m, int i, int j) {
  return Rational(-1, 2) * Expr(m.atom(1, {})) * Expr(m.atom(2, {i})) * Expr(m.atom(2, {j})) * m.sqrt_det();
}

}  // namespace

TEST_CASE("homothety degrees") {
  auto m = fluid(4);
  ScalingLaw law = ScalingLaw::metric(*m);
  Homothetic h = homothety_scale(*m, m->sqrt_det(), law);
  REQUIRE(h.degree);
  CHECK(*h.degree == Rational(2));
  CHECK(h.scaled == pow(Expr(homothety_parameter()), Exponent(2)) * m->sqrt_det());
  Homothetic f = homothety_scale(*m, fluid_source(*m, 0, 1), law);
  REQUIRE(f.degree);
  CHECK(*f.degree == Rational(-1, 2));
  CHECK(*homothety_scale(*m, Expr(Rational(7, 3)), law).degree == Rational(0));
  Expr mixed = Expr(m->atom(0, {0, 0})) + Expr(m->atom(1, {}));
  CHECK_FALSE(homothety_scale(*m, mixed, law).degree.has_value());
}

TEST_CASE("property: homothety degree is additive and survives total derivatives") {
  auto m = declare_model({2, {1, 1}}, {BundleSpec::scalar("u"), BundleSpec::scalar("v")}, 2);
  ScalingLaw law;
  law.fields[0] = Rational(1, 2);
  law.fields[1] = Rational(-2);
  vt_test::JetGen gen(77, m);
  auto mono = [&]() {
    Expr x(gen.coef());
    int deg = gen.uniform(1, 3);
    for (int k = 0; k < deg; ++k) x *= gen.uniform(0, 3) == 0 ? Expr(gen.base()) : Expr(gen.jet(1));
    return x;
  };
  for (int trial = 0; trial < 100; ++trial) {
    Expr a = mono();
    Expr b = mono();
    auto da = homothety_scale(*m, a, law).degree;
    auto db = homothety_scale(*m, b, law).degree;
    REQUIRE(da);
    REQUIRE(db);
    CHECK(*homothety_scale(*m, a * b, law).degree == *da + *db);
    Expr d = total_derivative(*m, a, gen.uniform(0, 1));
    if (!d.is_zero()) CHECK(*homothety_scale(*m, d, law).degree == *da);
  }
}

TEST_CASE("Vainberg-Tonti Lagrangians of small source forms") {
  auto m = two_scalars();
  Expr u(m->atom(0, {}));
  Expr v(m->atom(1, {}));
  SourceSpec single{m, {0}, {{m->atom(0, {}), u}}};
  CHECK(vainberg_tonti(single).density == Rational(1, 2) * u * u);
  CompletionResult c0 = canonical_completion(single);
  CHECK(c0.kappa.at(m->atom(0, {})).is_zero());

  SourceSpec skew{m, {0, 1}, {{m->atom(0, {}), v}, {m->atom(1, {}), Expr()}}};
  CompletionResult c = canonical_completion(skew);
  CHECK(c.vt_lagrangian.density == Rational(1, 2) * u * v);
  CHECK(c.kappa.at(m->atom(0, {})) == Rational(-1, 2) * v);
  CHECK(c.kappa.at(m->atom(1, {})) == Rational(1, 2) * u);
}

TEST_CASE("non-integrable homotopies are rejected") {
  auto m = two_scalars();
  Expr u(m->atom(0, {}));
  SourceSpec s{m, {0}, {{m->atom(0, {}), pow(u, Exponent(-1))}}};
  CHECK_THROWS_AS(vainberg_tonti(s), NonIntegrableHomotopy);
  SourceSpec ok{m, {0}, {{m->atom(0, {}), pow(u, Exponent(-1, 2))}}};
  // int_0^1 u (t u)^(-1/2) dt = 2 u^(1/2)
  CHECK(vainberg_tonti(ok).density == 2 * pow(u, Exponent(1, 2)));
  SourceSpec bad{m, {0}, {{m->atom(1, {}), u}}};
  CHECK_THROWS_AS(vainberg_tonti(bad), ModelError);
}

TEST_CASE("perfect fluid Lagrangian is recovered from its source form") {
  auto m = fluid(4);
  auto start = std::chrono::steady_clock::now();
  SourceSpec s{m, {0}, {}, true};
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) s.eps.emplace(m->atom(0, {i, j}), fluid_source(*m, i, j));
  Lagrangian l = vainberg_tonti(s, ScalingLaw::metric(*m), {normalization(*m)});
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(l.density == -(Expr(m->atom(1, {})) * m->sqrt_det()));
  CHECK(secs < 5.0);
  // Without the normalization rule the integrand keeps g_{ij} u^i u^j.
  Lagrangian raw = vainberg_tonti(s, ScalingLaw::metric(*m));
  CHECK_FALSE(raw.density == l.density);
}

TEST_CASE("perfect fluid energy-momentum tensor with the density variation rule") {
  for (int n : {2, 4}) {
    auto m = fluid(n);
    Expr rho(m->atom(1, {}));
    Expr p(m->atom(3, {}));
    auto u = [&](int i) { return Expr(m->atom(2, {i})); };
    auto u_low = [&](int i) {
      std::vector<Expr> parts;
      for (int a = 0; a < n; ++a) parts.push_back(m->metric_lowered(i, a) * u(a));
      return sum(parts);
    };
    VariationTable rules;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        rules[m->atom(1, {})][m->atom(0, {i, j})] =
            Rational(i == j ? 1 : 2) * (p + rho) / 2 * (m->metric_lowered(i, j) - u_low(i) * u_low(j));
    Lagrangian l{m, -(rho * m->sqrt_det())};
    EMTensor t = tensorial(*m, em_tensor(l, rules));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Expr want = (p + rho) * u(j) * u_low(i) - (i == j ? p : Expr());
        CHECK(t.at(j, i) == want);
      }
  }
}

TEST_CASE("completion of Euler-Lagrange source forms vanishes") {
  for (int n = 2; n <= 3; ++n) {
    auto m = vt_test::metric_scalar(n, n == 3);
    Lagrangian l{m, vt_test::scalar_density(*m)};
    for (std::vector<FieldId> over : {std::vector<FieldId>{1}, std::vector<FieldId>{0, 1}}) {
      SourceSpec s{m, over, source_entries(l, over)};
      CompletionResult c = canonical_completion(s);
      for (auto& [y, k] : c.kappa) CHECK(k.is_zero());
      CHECK(source_entries(c.vt_lagrangian, over) == s.eps);
    }
  }
}

TEST_CASE("covariant pairing of the volume density") {
  auto m = vt_test::metric_scalar(2);
  Lagrangian l{m, m->sqrt_det()};
  SourceSpec s{m, {0}, source_entries(l, {0}, true), true};
  CHECK(s.eps.at(m->atom(0, {0, 1})) == Rational(1, 2) * m->sqrt_det() * m->metric_upper(0, 1));
  CompletionResult c = canonical_completion(s, ScalingLaw::metric(*m));
  CHECK(c.vt_lagrangian.density == m->sqrt_det());
  for (auto& [y, k] : c.kappa) CHECK(k.is_zero());
}

TEST_CASE("property: exactness of the defining identity") {
  auto m = declare_model({2, {1, 1}}, {BundleSpec::scalar("u"), BundleSpec::scalar("v")}, 1);
  vt_test::JetGen gen(91, m);
  for (int trial = 0; trial < 30; ++trial) {
    SourceSpec s{m, {0, 1}, {}};
    for (FieldId f : {0, 1}) {
      Expr e = Expr(gen.coef()) * Expr(gen.jet(1));
      if (gen.uniform(0, 1) != 0) e += Expr(gen.coef()) * Expr(gen.jet(0)) * Expr(gen.jet(0));
      s.eps.emplace(m->atom(f, {}), e);
    }
    CompletionResult c = canonical_completion(s);
    auto e = source_entries(c.vt_lagrangian, {0, 1});
    for (auto& [y, x] : e) CHECK((x - s.eps.at(y) - c.kappa.at(y)).is_zero());
  }
}
