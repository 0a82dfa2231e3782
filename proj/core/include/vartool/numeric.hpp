#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include "vartool/expr.hpp"
#include "vartool/numcheck.hpp"

namespace vartool::numeric {

/// Monomial bookkeeping for Taylor series in `vars` variables truncated
/// above total degree `degree`.
class SeriesSpace {
 public:
  SeriesSpace(int vars, int degree);

  int vars() const { return vars_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exps_.size()); }
  const std::array<int, kMaxDim>& exponents(int k) const { return exps_[static_cast<std::size_t>(k)]; }
  int total_degree(int k) const { return deg_[static_cast<std::size_t>(k)]; }
  /// -1 when the exponent vector is beyond the truncation.
  int index(const std::array<int, kMaxDim>& e) const;

  struct Product {
    int a, b, out;
  };
  const std::vector<Product>& products() const { return products_; }
  /// For monomial k: index of k + e_v, or -1.
  int raised(int k, int v) const { return raised_[static_cast<std::size_t>(k * vars_ + v)]; }

 private:
  int vars_;
  int degree_;
  std::vector<std::array<int, kMaxDim>> exps_;
  std::vector<int> deg_;
  std::map<std::array<int, kMaxDim>, int> index_;
  std::vector<Product> products_;
  std::vector<int> raised_;
};

class Series {
 public:
  Series() = default;
  explicit Series(const SeriesSpace& sp, double c0 = 0.0);

  const SeriesSpace& space() const { return *sp_; }
  bool empty() const { return c_.empty(); }
  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double& operator[](int k) { return c_[static_cast<std::size_t>(k)]; }
  double operator[](int k) const { return c_[static_cast<std::size_t>(k)]; }
  /// Coefficient of x^alpha times alpha!, i.e. the partial derivative at 0.
  double derivative_at_origin(const std::vector<int>& multi) const;
  /// Exact partial derivative of the truncated series (top degree is lost).
  Series partial(int v) const;

  Series& operator+=(const Series& o);
  Series& operator-=(const Series& o);
  Series& operator*=(double s);
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  friend Series operator*(const Series& a, const Series& b);
  friend Series operator*(double s, Series a) { return a *= s; }
  Series operator-() const { return -1.0 * *this; }

 private:
  const SeriesSpace* sp_ = nullptr;
  std::vector<double> c_;
};

/// Real power of a series with positive constant term (integer powers also
/// accept negative constants).  Throws DomainError otherwise.
Series pow(const Series& s, double q);

class Tape;

/// Handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* t, int id) : t_(t), id_(id) {}
  Tape* tape() const { return t_; }
  int id() const { return id_; }
  const Series& value() const;

  friend Var operator+(const Var& a, const Var& b);
  friend Var operator-(const Var& a, const Var& b);
  friend Var operator*(const Var& a, const Var& b);
  friend Var operator*(double s, const Var& a);
  friend Var operator+(const Var& a, double s);
  Var operator-() const { return -1.0 * *this; }
  friend Var pow(const Var& a, double q);

 private:
  Tape* t_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape over series values.  Adjoints are series too, so one
/// backward sweep yields every partial derivative as a function of x.
class Tape {
 public:
  explicit Tape(const SeriesSpace& sp) : sp_(sp) {}

  const SeriesSpace& space() const { return sp_; }
  Var input(Series v);
  Var constant(double c);
  const Series& value(int id) const { return nodes_[static_cast<std::size_t>(id)].val; }
  std::size_t size() const { return nodes_.size(); }

  /// d out / d input for each input, as series.
  std::vector<Series> gradient(const Var& out, const std::vector<Var>& inputs) const;

 private:
  friend class Var;
  friend Var operator+(const Var&, const Var&);
  friend Var operator-(const Var&, const Var&);
  friend Var operator*(const Var&, const Var&);
  friend Var operator*(double, const Var&);
  friend Var operator+(const Var&, double);
  friend Var pow(const Var&, double);

  enum class Op { Leaf, Add, Sub, Mul, Scale, Shift, Pow };
  struct Node {
    Series val;
    Op op;
    int a;
    int b;
    double q;
  };
  Var push(Series v, Op op, int a, int b, double q);

  const SeriesSpace& sp_;
  std::vector<Node> nodes_;
};

/// Evaluates `e` in any scalar type supporting +, *, double * T and
/// pow(T, double), where T{} acts as zero.  `leaf` supplies non-power atoms.
template <class T, class Leaf>
T evaluate(const Expr& e, Leaf&& leaf, const T& one) {
  std::unordered_map<Atom, T> atoms;
  std::unordered_map<Atom, T> bodies;
  std::function<T(const Expr&)> rec = [&](const Expr& x) -> T {
    T acc{};
    for (const Term& t : x.terms()) {
      T prod = one;
      bool first = true;
      for (const Factor& f : t.mono) {
        T base{};
        if (f.atom.is_power()) {
          auto it = bodies.find(f.atom);
          if (it == bodies.end()) it = bodies.emplace(f.atom, rec(f.atom.body())).first;
          base = it->second;
        } else {
          auto it = atoms.find(f.atom);
          if (it == atoms.end()) it = atoms.emplace(f.atom, leaf(f.atom)).first;
          base = it->second;
        }
        T fac = base;
        if (f.exp.is_integer() && f.exp.num() > 0) {
          for (long long k = 1; k < f.exp.num(); ++k) fac = fac * base;
        } else {
          using std::pow;
          fac = pow(base, f.exp.to_double());
        }
        prod = first ? fac : prod * fac;
        first = false;
      }
      acc = acc + t.coef.to_double() * prod;
    }
    return acc;
  };
  return rec(e);
}

/// Taylor series of the section through `p` for any atom: jets expand via
/// their higher jets, base coordinates are x0 + x, externals are constant.
Series section_series(const SeriesSpace& sp, const PointAssignment& p, const Atom& a);

/// Numeric Euler-Lagrange expressions along the section through `p`.
///
/// `build(tape, slot)` must return the Lagrangian on the tape, obtaining
/// every atom through `slot`.  The result maps each of the order-zero
/// `components` to E_y, a series whose degree drops by the Lagrangian order.
using SlotFn = std::function<Var(const Atom&)>;
std::map<Atom, Series> euler_lagrange(const SeriesSpace& sp, const PointAssignment& p,
                                      const std::vector<Atom>& components,
                                      const std::function<Var(Tape&, const SlotFn&)>& build);

/// Same for a symbolic density.
std::map<Atom, Series> euler_lagrange(const SeriesSpace& sp, const PointAssignment& p,
                                      const std::vector<Atom>& components, const Expr& density);

/// Metric jets g^{ab}, g^{ab}_{,k}, g^{ab}_{,kl} as dense symmetric arrays.
template <class T>
struct MetricJets {
  int n = 0;
  std::vector<T> g, dg, ddg;  // [a][b], [a][b][k], [a][b][k][l]
  const T& up(int a, int b) const { return g[static_cast<std::size_t>(a * n + b)]; }
  const T& d(int a, int b, int k) const { return dg[static_cast<std::size_t>((a * n + b) * n + k)]; }
  const T& dd(int a, int b, int k, int l) const { return ddg[static_cast<std::size_t>(((a * n + b) * n + k) * n + l)]; }
};

namespace detail {

template <class T>
T det(const std::vector<T>& a, int n, const std::vector<int>& rows, const std::vector<int>& cols) {
  if (rows.size() == 1) return a[static_cast<std::size_t>(rows[0] * n + cols[0])];
  T acc{};
  std::vector<int> sub_rows(rows.begin() + 1, rows.end());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::vector<int> sub_cols;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (k != c) sub_cols.push_back(cols[k]);
    T term = a[static_cast<std::size_t>(rows[0] * n + cols[c])] * det(a, n, sub_rows, sub_cols);
    acc = acc + (c % 2 == 1 ? -1.0 : 1.0) * term;
  }
  return acc;
}

}  // namespace detail

/// Lowered metric, Levi-Civita symbols and Ricci contraction computed from
/// the jets of the contravariant metric, with
/// R^i_{jkl} = d_k G^i_{jl} - d_l G^i_{jk} + G^i_{km} G^m_{jl} - G^i_{lm} G^m_{jk}.
template <class T>
struct CurvatureParts {
  int n = 0;
  T det;                  // det g^{..}
  std::vector<T> lower;   // g_{ab}
  std::vector<T> gamma;   // G^i_{jk}
  std::vector<T> ricci;   // R_{jl}
  T scalar;               // R
};

template <class T>
CurvatureParts<T> curvature_parts(const MetricJets<T>& j) {
  using std::pow;
  const int n = j.n;
  auto I2 = [n](int a, int b) { return static_cast<std::size_t>(a * n + b); };
  auto I3 = [n](int a, int b, int c) { return static_cast<std::size_t>((a * n + b) * n + c); };
  auto I4 = [n](int a, int b, int c, int d) { return static_cast<std::size_t>(((a * n + b) * n + c) * n + d); };
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;

  const T det = detail::det(j.g, n, all, all);
  const T inv_det = pow(det, -1.0);
  std::vector<T> gl(static_cast<std::size_t>(n * n));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) {
      if (n == 1) {
        gl[0] = inv_det;
        continue;
      }
      std::vector<int> rows;
      std::vector<int> cols;
      for (int k = 0; k < n; ++k) {
        if (k != b) rows.push_back(k);
        if (k != a) cols.push_back(k);
      }
      T c = ((a + b) % 2 == 1 ? -1.0 : 1.0) * detail::det(j.g, n, rows, cols);
      gl[I2(a, b)] = c * inv_det;
      gl[I2(b, a)] = gl[I2(a, b)];
    }

  // H[a][c][k] = g_{ad} g^{dc}_{,k};  g_{ab,k} = -H[a][c][k] g_{cb}.
  std::vector<T> h(static_cast<std::size_t>(n * n * n));
  for (int a = 0; a < n; ++a)
    for (int c = 0; c < n; ++c)
      for (int k = 0; k < n; ++k) {
        T acc = gl[I2(a, 0)] * j.d(0, c, k);
        for (int d = 1; d < n; ++d) acc = acc + gl[I2(a, d)] * j.d(d, c, k);
        h[I3(a, c, k)] = acc;
      }
  std::vector<T> dgl(static_cast<std::size_t>(n * n * n));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int k = 0; k < n; ++k) {
        T acc = h[I3(a, 0, k)] * gl[I2(0, b)];
        for (int c = 1; c < n; ++c) acc = acc + h[I3(a, c, k)] * gl[I2(c, b)];
        dgl[I3(a, b, k)] = -1.0 * acc;
        dgl[I3(b, a, k)] = dgl[I3(a, b, k)];
      }
  // M[a][d][k][l] = g_{ac} g^{cd}_{,kl}.
  std::vector<T> mm(static_cast<std::size_t>(n * n * n * n));
  for (int a = 0; a < n; ++a)
    for (int d = 0; d < n; ++d)
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          T acc = gl[I2(a, 0)] * j.dd(0, d, k, l);
          for (int c = 1; c < n; ++c) acc = acc + gl[I2(a, c)] * j.dd(c, d, k, l);
          mm[I4(a, d, k, l)] = acc;
          mm[I4(a, d, l, k)] = acc;
        }
  // g_{ab,kl} = -g_{ac,l} H[b][c][k] - H[a][d][k] g_{bd,l} - M[a][d][k][l] g_{db}.
  std::vector<T> ddgl(static_cast<std::size_t>(n * n * n * n));
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b)
      for (int k = 0; k < n; ++k)
        for (int l = k; l < n; ++l) {
          T acc = dgl[I3(a, 0, l)] * h[I3(b, 0, k)] + h[I3(a, 0, k)] * dgl[I3(b, 0, l)] + mm[I4(a, 0, k, l)] * gl[I2(0, b)];
          for (int c = 1; c < n; ++c)
            acc = acc + dgl[I3(a, c, l)] * h[I3(b, c, k)] + h[I3(a, c, k)] * dgl[I3(b, c, l)] + mm[I4(a, c, k, l)] * gl[I2(c, b)];
          acc = -1.0 * acc;
          ddgl[I4(a, b, k, l)] = acc;
          ddgl[I4(b, a, k, l)] = acc;
          ddgl[I4(a, b, l, k)] = acc;
          ddgl[I4(b, a, l, k)] = acc;
        }

  // Lowered symbols G_{ljk} and their derivatives, then raise.
  std::vector<T> cl(static_cast<std::size_t>(n * n * n));
  for (int l = 0; l < n; ++l)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        cl[I3(l, a, b)] = 0.5 * (dgl[I3(l, a, b)] + dgl[I3(l, b, a)] + -1.0 * dgl[I3(a, b, l)]);
        cl[I3(l, b, a)] = cl[I3(l, a, b)];
      }
  std::vector<T> gam(static_cast<std::size_t>(n * n * n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        T acc = j.up(i, 0) * cl[I3(0, a, b)];
        for (int l = 1; l < n; ++l) acc = acc + j.up(i, l) * cl[I3(l, a, b)];
        gam[I3(i, a, b)] = acc;
        gam[I3(i, b, a)] = acc;
      }
  // dgam[i][a][b][m] = d_m G^i_{ab}
  std::vector<T> dgam(static_cast<std::size_t>(n * n * n * n));
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int m = 0; m < n; ++m) {
          T acc{};
          for (int l = 0; l < n; ++l) {
            T dcl = 0.5 * (ddgl[I4(l, a, b, m)] + ddgl[I4(l, b, a, m)] + -1.0 * ddgl[I4(a, b, l, m)]);
            acc = acc + j.d(i, l, m) * cl[I3(l, a, b)] + j.up(i, l) * dcl;
          }
          dgam[I4(i, a, b, m)] = acc;
          dgam[I4(i, b, a, m)] = acc;
        }
  // R_{jl} = R^k_{jkl}
  CurvatureParts<T> out;
  out.n = n;
  out.ricci.assign(static_cast<std::size_t>(n * n), T{});
  T r{};
  for (int jj = 0; jj < n; ++jj)
    for (int l = jj; l < n; ++l) {
      T acc{};
      for (int k = 0; k < n; ++k) {
        acc = acc + dgam[I4(k, jj, l, k)] + -1.0 * dgam[I4(k, jj, k, l)];
        for (int m = 0; m < n; ++m) acc = acc + gam[I3(k, k, m)] * gam[I3(m, jj, l)] + -1.0 * (gam[I3(k, l, m)] * gam[I3(m, jj, k)]);
      }
      out.ricci[I2(jj, l)] = acc;
      out.ricci[I2(l, jj)] = acc;
      r = r + (jj == l ? 1.0 : 2.0) * (j.up(jj, l) * acc);
    }
  out.det = det;
  out.lower = std::move(gl);
  out.gamma = std::move(gam);
  out.scalar = r;
  return out;
}

/// Hilbert density R sqrt|det g|; `s` is the sign of det(g^{..}).
template <class T>
T hilbert_density(const MetricJets<T>& j, int s) {
  using std::pow;
  CurvatureParts<T> c = curvature_parts(j);
  return c.scalar * pow(static_cast<double>(s) * c.det, -0.5);
}

}  // namespace vartool::numeric
