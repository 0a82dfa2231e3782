#include <random>

#include "doctest.h"
#include "gen.hpp"
#include "vartool/error.hpp"
#include "vartool/model.hpp"

using namespace vartool;

namespace {

ModelPtr metric_model(int n, std::vector<int> sig = {}) {
  return declare_model({n, std::move(sig)}, {BundleSpec::metric(), BundleSpec::scalar("phi")}, 2);
}

// Exact inverse by Gauss-Jordan elimination over the rationals.
std::vector<std::vector<Rational>> inverse(std::vector<std::vector<Rational>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<Rational>> b(n, std::vector<Rational>(n));
  for (std::size_t i = 0; i < n; ++i) b[i][i] = 1;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    while (a[p][c].is_zero()) ++p;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    Rational inv = a[c][c].inverse();
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] *= inv;
      b[c][k] *= inv;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c].is_zero()) continue;
      Rational f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] -= f * a[c][k];
        b[r][k] -= f * b[c][k];
      }
    }
  }
  return b;
}

}  // namespace

TEST_CASE("declare_model validation") {
  CHECK_NOTHROW(declare_model({4, {1, -1, -1, -1}}, {BundleSpec::metric(), BundleSpec::scalar("phi")}, 2));
  CHECK_THROWS_AS(declare_model({2, {}}, {BundleSpec::metric("g"), BundleSpec::metric("h")}, 1), ModelError);
  CHECK_THROWS_AS(declare_model({2, {}}, {BundleSpec::scalar("a"), BundleSpec::scalar("a")}, 1), ModelError);
  BundleSpec w = BundleSpec::scalar("phi");
  w.weight = Rational(1);
  CHECK_THROWS_AS(declare_model({2, {}}, {w}, 1), ModelError);

  BundleSpec rho = BundleSpec::scalar("rho");
  rho.external = true;
  rho.weight = Rational(-3, 2);
  BundleSpec u = BundleSpec::tensor("u", 1, 0);
  u.external = true;
  u.weight = Rational(-1, 2);
  auto m = declare_model({4, {1, -1, -1, -1}}, {BundleSpec::metric(), rho, u}, 1);
  CHECK(m->atom(m->id("u"), {2}) == Atom::external("u", {2}));
  CHECK(m->atom(0, {3, 1}) == m->atom(0, {1, 3}));
  CHECK(m->components(0).size() == 10);
}

TEST_CASE("lowered metric closed forms") {
  auto m1 = metric_model(1);
  Expr g00 = m1->metric_upper(0, 0);
  CHECK(m1->metric_lowered(0, 0) * g00 == Expr(1));
  CHECK(m1->sqrt_det() == pow(g00, Exponent(-1, 2)));

  auto m2 = metric_model(2);
  Expr a = m2->metric_upper(0, 0), b = m2->metric_upper(0, 1), c = m2->metric_upper(1, 1);
  CHECK(m2->metric_lowered(0, 0) == c * pow(a * c - b * b, -1));

  auto lor = metric_model(2, {1, -1});
  CHECK(lor->det_body() == b * b - a * c);
  Bindings at{{lor->atom(0, {0, 0}), Expr(1)}, {lor->atom(0, {0, 1}), Expr(0)}, {lor->atom(0, {1, 1}), Expr(-1)}};
  CHECK(substitute(lor->sqrt_det(), at) == Expr(1));
}

TEST_CASE("metric_lowered inverts the fundamentals symbolically") {
  for (int n : {2, 3}) {
    auto m = metric_model(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::vector<Expr> parts;
        for (int a = 0; a < n; ++a) parts.push_back(m->metric_upper(i, a) * m->metric_lowered(a, j));
        CHECK(sum(parts) == Expr(i == j ? 1 : 0));
      }
  }
}

TEST_CASE("property: lowered metric matches an exact matrix inverse") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> off(-64, 64);
  for (int n : {2, 3, 4}) {
    auto m = metric_model(n);
    for (int trial = 0; trial < 25; ++trial) {
      std::vector<std::vector<Rational>> g(static_cast<std::size_t>(n), std::vector<Rational>(static_cast<std::size_t>(n)));
      Bindings at;
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          Rational v = Rational(off(rng), 128) + Rational(i == j ? 2 : 0);
          g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = v;
          g[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = v;
          at[m->atom(0, {i, j})] = Expr(v);
        }
      auto inv = inverse(g);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          CHECK(substitute(m->metric_lowered(i, j), at) == Expr(inv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
      // sqrt_det^2 * det(g^..) = 1
      Expr s = substitute(m->sqrt_det(), at);
      Expr det = substitute(m->det_body(), at);
      CHECK(s * s * det == Expr(1));
    }
  }
}

TEST_CASE("jet atoms are independent") {
  auto m = metric_model(2);
  Atom a = m->atom(1, {}, {0}), b = m->atom(1, {}, {1}), g = m->atom(0, {0, 1}, {1});
  CHECK(partial_derivative(Expr(a), b).is_zero());
  CHECK(partial_derivative(Expr(g), m->atom(0, {0, 1})).is_zero());
  CHECK(partial_derivative(Expr(g), m->atom(0, {1, 0}, {1})) == Expr(1));
}

TEST_CASE("canonical lift coefficients") {
  auto m = declare_model({2, {}},
                         {BundleSpec::metric(), BundleSpec::tensor("v", 1, 0, Role::Background),
                          BundleSpec::tensor("w", 0, 1, Role::Background), BundleSpec::distortion(),
                          BundleSpec::scalar("phi")},
                         1);
  FieldId g = 0, v = 1, w = 2, N = 3, phi = 4;
  CHECK(lift_coefficient(*m, m->atom(g, {0, 0}), 0, 1) == 2 * Expr(m->atom(g, {0, 1})));
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        CHECK(lift_coefficient(*m, m->atom(v, {a}), i, j) == (a == i ? Expr(m->atom(v, {j})) : Expr()));
        CHECK(lift_coefficient(*m, m->atom(w, {a}), i, j) == (a == j ? -Expr(m->atom(w, {i})) : Expr()));
        CHECK(lift_coefficient(*m, m->atom(phi, {}), i, j).is_zero());
      }
  // delta^m_i N^j_{hl} - delta^j_h N^m_{il} - delta^j_l N^m_{hi}
  for (int mm = 0; mm < 2; ++mm)
    for (int h = 0; h < 2; ++h)
      for (int l = 0; l < 2; ++l)
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            Expr want;
            if (mm == i) want += Expr(m->atom(N, {j, h, l}));
            if (j == h) want -= Expr(m->atom(N, {mm, i, l}));
            if (j == l) want -= Expr(m->atom(N, {mm, h, i}));
            CHECK(lift_coefficient(*m, m->atom(N, {mm, h, l}), i, j) == want);
          }
}
