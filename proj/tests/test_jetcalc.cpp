#include "doctest.h"
#include "gen.hpp"
#include "jetgen.hpp"
#include "vartool/error.hpp"
#include "vartool/jetcalc.hpp"

using namespace vartool;

namespace {

ModelPtr scalars(int n, int count, int order = 2) {
  std::vector<BundleSpec> b;
  for (int k = 0; k < count; ++k) b.push_back(BundleSpec::scalar(k == 0 ? "y" : "z" + std::to_string(k)));
  return declare_model({n, {}}, b, order);
}

Expr J(const ModelPtr& m, int f, std::vector<int> d = {}) { return Expr(m->atom(f, {}, std::move(d))); }

}  // namespace

TEST_CASE("total derivative") {
  auto m = scalars(3, 1);
  CHECK(total_derivative(*m, Expr(Atom::base(0)), 0) == Expr(1));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(total_derivative(*m, J(m, 0) * J(m, 0, {j}), i) == J(m, 0, {i}) * J(m, 0, {j}) + J(m, 0) * J(m, 0, {i, j}));
  CHECK(total_derivative(*m, Expr(Atom::external("c")), 1).is_zero());
  auto capped = declare_model({1, {}}, {BundleSpec::scalar("y")}, 1, 2);
  CHECK_THROWS_AS(total_derivative(*capped, J(capped, 0, {0, 0}), 0), JetOrderError);
}

TEST_CASE("prolongation recursion") {
  auto m = scalars(1, 1);
  VectorField v = VectorField::zero(1);
  v.vertical[m->atom(0, {})] = J(m, 0);
  Prolongation p(*m, v);
  CHECK(p.component(m->atom(0, {}, {0})) == J(m, 0, {0}));
  VectorField h = VectorField::zero(1);
  h.xi[0] = Expr(Atom::base(0));
  Prolongation ph(*m, h);
  CHECK(ph.component(m->atom(0, {}, {0})) == -J(m, 0, {0}));
  CHECK(ph.component(m->atom(0, {}, {0, 0})) == -2 * J(m, 0, {0, 0}));
  VectorField t = VectorField::zero(1);
  t.xi[0] = Expr(1);
  Prolongation pt(*m, t);
  CHECK(pt.component(m->atom(0, {}, {0, 0})).is_zero());
}

TEST_CASE("Lie derivative of Lagrangians") {
  auto m = scalars(1, 1);
  VectorField v = VectorField::zero(1);
  v.vertical[m->atom(0, {})] = Expr(1);
  CHECK(lie_derivative_lagrangian({m, Expr(7)}, v).is_zero());
  CHECK(lie_derivative_lagrangian({m, J(m, 0)}, v) == Expr(1));
  VectorField t = VectorField::zero(1);
  t.xi[0] = Expr(1);
  CHECK(lie_derivative_lagrangian({m, Rational(1, 2) * J(m, 0, {0}) * J(m, 0, {0})}, t).is_zero());
}

TEST_CASE("Euler-Lagrange expressions") {
  auto m1 = scalars(1, 2);
  CHECK(euler_lagrange({m1, Rational(1, 2) * J(m1, 0, {0}) * J(m1, 0, {0})}, m1->atom(0, {})) == -J(m1, 0, {0, 0}));
  Lagrangian l{m1, J(m1, 0) * J(m1, 1, {0})};
  CHECK(euler_lagrange(l, m1->atom(0, {})) == J(m1, 1, {0}));
  CHECK(euler_lagrange(l, m1->atom(1, {})) == -J(m1, 0, {0}));
  // The golden symmetric multi-index case: E of (1/2) y_{01}^2 on n = 2.
  auto m2 = scalars(2, 1);
  CHECK(euler_lagrange({m2, Rational(1, 2) * J(m2, 0, {0, 1}) * J(m2, 0, {0, 1})}, m2->atom(0, {})) ==
        J(m2, 0, {0, 0, 1, 1}));
}

TEST_CASE("Poincaré-Cartan coefficients") {
  auto m = scalars(1, 1, 2);
  Atom y = m->atom(0, {});
  PoincareCartan x = poincare_cartan({m, Expr(Atom::base(0)) * Expr(Atom::base(0))});
  CHECK(x.contact.empty());
  PoincareCartan a = poincare_cartan({m, Rational(1, 2) * J(m, 0, {0}) * J(m, 0, {0})});
  CHECK(a.contact.at(y)[0] == J(m, 0, {0}));
  PoincareCartan b = poincare_cartan({m, Rational(1, 2) * J(m, 0, {0, 0}) * J(m, 0, {0, 0})});
  CHECK(b.contact.at(y)[0] == -J(m, 0, {0, 0, 0}));
  CHECK(b.contact.at(m->atom(0, {}, {0}))[0] == J(m, 0, {0, 0}));
  auto m3 = scalars(1, 1, 3);
  CHECK_THROWS_AS(poincare_cartan({m3, J(m3, 0, {0, 0, 0})}), UnsupportedOrder);
}

TEST_CASE("Noether currents") {
  auto m = scalars(1, 1);
  VectorField t = VectorField::zero(1);
  t.xi[0] = Expr(1);
  Lagrangian l{m, Rational(1, 2) * J(m, 0, {0}) * J(m, 0, {0})};
  CHECK(noether_current(l, t)[0] == Rational(1, 2) * J(m, 0, {0}) * J(m, 0, {0}));
  VectorField v = VectorField::zero(1);
  v.vertical[m->atom(0, {})] = Expr(3);
  CHECK(noether_current({m, Expr(Atom::base(0))}, v)[0].is_zero());
  Expr x = Expr(Atom::base(0));
  VectorField h = VectorField::zero(1);
  h.xi[0] = x * x;
  CHECK(noether_current({m, x}, h)[0] == -(x * x * x));
}

TEST_CASE("first variation formula examples") {
  auto m = scalars(1, 1);
  VectorField t = VectorField::zero(1);
  t.xi[0] = Expr(1);
  CHECK(first_variation_residual({m, Rational(1, 2) * J(m, 0, {0}) * J(m, 0, {0})}, t).is_zero());
  VectorField v = VectorField::zero(1);
  v.vertical[m->atom(0, {})] = J(m, 0);
  CHECK(first_variation_residual({m, J(m, 0) * J(m, 0, {0})}, v).is_zero());
}

TEST_CASE("general covariance") {
  auto m = declare_model({2, {}}, {BundleSpec::metric(), BundleSpec::scalar("phi")}, 1);
  CHECK(check_covariance({m, m->sqrt_det()}).covariant);
  Expr kin;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      kin += Rational(1, 2) * m->metric_upper(i, j) * J(m, 1, {i}) * J(m, 1, {j});
  CHECK(check_covariance({m, kin * m->sqrt_det()}).covariant);
  CovarianceReport bad = check_covariance({m, J(m, 1, {0}) * J(m, 1, {0})});
  CHECK_FALSE(bad.covariant);
  bool at_xi00 = false;
  for (auto& [mono, c] : bad.failing)
    if (mono.size() == 1 && mono[0].atom == m->xi(0, {0})) at_xi00 = true;
  CHECK(at_xi00);
}

TEST_CASE("property: total derivatives commute") {
  auto m = scalars(3, 2);
  vt_test::JetGen g(21, m);
  for (int k = 0; k < 100; ++k) {
    Expr e = g.lagrangian(2);
    int i = g.uniform(0, 2), j = g.uniform(0, 2);
    CHECK(total_derivative(*m, total_derivative(*m, e, i), j) == total_derivative(*m, total_derivative(*m, e, j), i));
  }
}

TEST_CASE("property: Euler-Lagrange kills total divergences") {
  auto m = scalars(2, 2);
  vt_test::JetGen g(22, m);
  for (int k = 0; k < 100; ++k) {
    Expr div;
    for (int i = 0; i < 2; ++i) div += total_derivative(*m, g.lagrangian(1), i);
    Expr l = g.lagrangian(2);
    for (FieldId f = 0; f < 2; ++f) {
      Atom y = m->atom(f, {});
      CHECK(euler_lagrange({m, div}, y).is_zero());
      CHECK(euler_lagrange({m, l + div}, y) == euler_lagrange({m, l}, y));
    }
  }
}

TEST_CASE("property: first variation identity") {
  auto m = scalars(2, 2);
  vt_test::JetGen g(23, m);
  for (int k = 0; k < 60; ++k) {
    Lagrangian l{m, g.lagrangian(2)};
    VectorField v = g.vector_field();
    CHECK(first_variation_residual(l, v) == Expr());
  }
}
